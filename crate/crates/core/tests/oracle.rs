use faer::c64;
use qbattery::basis::{build_subspace, sector_configs, FermionConfig};
use qbattery::blocks::ZzKernel;
use qbattery::dynamics::{initial_vector, DensityScale, Propagator, TimeGrid};
use qbattery::hamiltonian::{molecular_block, ChargingModel};
use qbattery::linalg::{eigvalsh, max_abs_diff};
use qbattery::oracle::{brute_force_evolve, brute_force_h, full_initial_state, project_subspace, slater_state};
use qbattery::params::{AggregateParams, CavityParams, CouplingSpec};

fn params(n: usize, j: f64, a: f64) -> AggregateParams {
    AggregateParams::dimensionless(n, j, a).unwrap()
}

#[test]
fn subspace_hamiltonian_and_trajectory_match_brute_force() {
    let grid = TimeGrid::new(0.01, 20.0).unwrap();
    for n in [2, 4, 6, 8] {
        let model = ChargingModel::new(n, n, true, ZzKernel::Auto).unwrap();
        for j in [0.0, -0.2] {
            for a in [-0.5, 0.0, 0.8] {
                for gbar in [0.3, 1.0] {
                    let p = params(n, j, a);
                    let cav = CavityParams::resonant_full(&p);
                    let g = CouplingSpec::norm_i(gbar).unwrap().resolve(&p);
                    let h = model.assemble(&p, &cav, g).unwrap();
                    let full = brute_force_h(&p, &cav, g, n).unwrap();
                    let projected = project_subspace(&full, model.basis(), false).unwrap();
                    let diff = max_abs_diff(h.matrix(), projected.as_ref());
                    assert!(diff < 1e-10, "N={n} J={j} A={a} gbar={gbar}: entry diff {diff}");

                    let hm = model.molecular_operator(&p).unwrap();
                    let psi = initial_vector(model.basis(), n, &p).unwrap();
                    let scale = DensityScale::from(&p);
                    let main = Propagator::new(&h, &hm, &psi, 1.0).unwrap().trajectory(&grid, scale, None).unwrap();
                    let reference = brute_force_evolve(&full, &full_initial_state(&full, n), &grid, scale).unwrap();
                    for (x, y) in main.e_density.iter().zip(&reference.e_density) {
                        assert!((x - y).abs() < 1e-8, "N={n} J={j} A={a} gbar={gbar}: {x} vs {y}");
                    }
                }
            }
        }
    }
}

#[test]
fn every_momentum_sector_matches_brute_force() {
    for n in 2..=5 {
        let p = params(n, -0.3, 0.6);
        let cav = CavityParams::new(0.9, 2).unwrap();
        let model = ChargingModel::new(n, 2, false, ZzKernel::Auto).unwrap();
        let h = model.assemble(&p, &cav, 0.17).unwrap();
        let full = brute_force_h(&p, &cav, 0.17, 2).unwrap();
        let projected = project_subspace(&full, model.basis(), false).unwrap();
        assert!(max_abs_diff(h.matrix(), projected.as_ref()) < 1e-10, "N={n}");
        let hm = model.molecular_operator(&p).unwrap();
        let projected_m = project_subspace(&full, model.basis(), true).unwrap();
        assert!(max_abs_diff(hm.matrix(), projected_m.as_ref()) < 1e-10, "N={n}");
    }
}

#[test]
fn slater_states_are_orthonormal() {
    let n = 6;
    for m in 0..=n {
        let configs = sector_configs(n, m, None);
        let states: Vec<Vec<(u32, c64)>> = configs.iter().map(slater_state).collect();
        for (a, sa) in states.iter().enumerate() {
            for (b, sb) in states.iter().enumerate() {
                let dot: c64 = sa.iter().zip(sb).map(|(x, y)| x.1.conj() * y.1).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((dot.re - expected).abs() < 1e-12 && dot.im.abs() < 1e-12, "m={m} ({a},{b})");
            }
        }
    }
}

#[test]
fn molecular_spectrum_matches_site_basis() {
    let n = 6;
    for (j, a) in [(-0.2, 0.8), (0.3, -0.7), (-0.2, -1.4)] {
        let p = params(n, j, a);
        let cav = CavityParams::new(1.0, 0).unwrap();
        let full = brute_force_h(&p, &cav, 0.0, 0).unwrap();
        for m in 0..=n {
            let block = full.excitation_block(m).unwrap();
            let expected = eigvalsh(block.as_ref()).unwrap();
            let got = molecular_block(&p, m, None).unwrap().eigenvalues().unwrap();
            for (x, y) in got.iter().zip(&expected) {
                assert!((x - y).abs() < 1e-10, "J={j} A={a} m={m}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn oracle_conserves_excitations_and_is_hermitian() {
    let p = params(5, -0.2, 0.4);
    let full = brute_force_h(&p, &CavityParams::new(1.1, 3).unwrap(), 0.2, 4).unwrap();
    assert_eq!(full.number_commutator_norm(), 0.0);
    assert!(full.hermiticity_defect() < 1e-15);
}

#[test]
fn oracle_refuses_huge_spaces() {
    let p = params(20, -0.2, 0.4);
    assert!(brute_force_h(&p, &CavityParams::resonant_full(&p), 0.1, 20).is_err());
}

#[test]
fn subspace_embedding_covers_vacuum_state() {
    let basis = build_subspace(4, 4, true).unwrap();
    let vac = FermionConfig::vacuum(4);
    assert_eq!(basis.entries()[basis.position(&vac).unwrap()].photons, 4);
}
