use faer::c64;
use rand::{Rng, SeedableRng};

use qbattery::blocks::ZzKernel;
use qbattery::dynamics::{initial_vector, sector_energy, Propagator};
use qbattery::hamiltonian::{molecular_block, ChargingModel};
use qbattery::linalg::eigh;
use qbattery::oracle::brute_force_h;
use qbattery::params::{AggregateParams, CavityParams};
use qbattery::perturbation::{h2_matrix, transition_prob, two_exciton_energy, two_exciton_modes, TwoExcitonModes};

/// `int_0^t f` by double-exponential quadrature on unit-length pieces.
fn integrate(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    let pieces = t.ceil().max(1.0) as usize;
    let h = t / pieces as f64;
    (0..pieces)
        .map(|i| quadrature::double_exponential::integrate(&f, i as f64 * h, (i + 1) as f64 * h, 1e-14).integral)
        .sum()
}

/// `T = -g^2 sqrt(N(N-1)) S sqrt(N) int_0^t dt1 int_0^t1 dt2 e^{i(E-2J)t1} e^{i2J t2}`
/// evaluated by nested quadrature.
fn amplitude_by_quadrature(modes: &TwoExcitonModes, alpha: usize, t: f64, g: f64) -> c64 {
    let j = modes.hopping;
    let b = modes.energies[alpha - 1] - 2.0 * j;
    let inner = |t1: f64| {
        c64::new(integrate(|t2| (2.0 * j * t2).cos(), t1), integrate(|t2| (2.0 * j * t2).sin(), t1))
    };
    let re = integrate(|t1| (c64::cis(b * t1) * inner(t1)).re, t);
    let im = integrate(|t1| (c64::cis(b * t1) * inner(t1)).im, t);
    let n = modes.n_sites as f64;
    c64::new(re, im) * (-g * g * (n * (n - 1.0)).sqrt() * modes.s_amp[alpha - 1] * n.sqrt())
}

#[test]
fn closed_form_probability_matches_quadrature() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
    let g = 0.05 / 8f64.sqrt();
    let modes = two_exciton_modes(8, -0.2, 0.5, 1.0).unwrap();
    let mut cases = vec![(2, 3.0)];
    cases.extend((0..19).map(|_| (rng.random_range(1..=4), rng.random_range(0.1..20.0))));
    for (alpha, t) in cases {
        let exact = transition_prob(&modes, alpha, t, g).unwrap();
        let quad = amplitude_by_quadrature(&modes, alpha, t, g).norm_sqr();
        assert!((exact - quad).abs() <= 1e-8 * quad, "alpha={alpha} t={t}: {exact} vs {quad}");
    }
}

#[test]
fn sum_rule_for_even_rings() {
    for n in (4..=12).step_by(2) {
        for a in [-0.9, -0.2, 0.0, 0.5, 1.0, 2.0] {
            let modes = two_exciton_modes(n, -0.2, a, 1.0).unwrap();
            assert!((modes.sum_rule() - 2.0 * (n as f64 - 1.0)).abs() < 1e-9, "N={n} A={a}");
        }
    }
}

#[test]
fn h2_matches_zero_momentum_two_exciton_block() {
    for n in [4, 6, 8, 10] {
        for (j, a) in [(-0.2, 0.5), (0.3, -0.6), (-0.2, 1.0)] {
            let p = AggregateParams::dimensionless(n, j, a).unwrap();
            let mut exact = molecular_block(&p, 2, Some(0)).unwrap().eigenvalues().unwrap();
            exact.iter_mut().for_each(|e| *e -= 2.0);
            let modes = two_exciton_modes(n, j, a, 1.0).unwrap();
            assert_eq!(exact.len(), modes.len(), "N={n}");
            for (x, y) in exact.iter().zip(&modes.energies) {
                assert!((x - y).abs() < 1e-9, "N={n} J={j} A={a}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn boundary_bond_of_h2_for_four_sites() {
    let h = h2_matrix(4, -0.2, 0.5).unwrap();
    let p = AggregateParams::dimensionless(4, -0.2, 0.5).unwrap();
    let exact = molecular_block(&p, 2, Some(0)).unwrap().eigenvalues().unwrap();
    let (tr, det) = (h[(0, 0)] + h[(1, 1)], h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)]);
    let (x, y) = (exact[0] - 2.0, exact[1] - 2.0);
    assert!((x + y - tr).abs() < 1e-12 && (x * y - det).abs() < 1e-12);
}

/// `sum_j S+_j` applied to the `k = 0` one-exciton state, weighted onto the
/// eigenstates of the site-basis two-exciton block.
#[test]
fn mode_amplitudes_match_site_basis_overlaps() {
    let n = 6;
    let (j, a) = (-0.2, 0.7);
    let p = AggregateParams::dimensionless(n, j, a).unwrap();
    let full = brute_force_h(&p, &CavityParams::new(1.0, 0).unwrap(), 0.0, 0).unwrap();
    let rows = full.excitation_rows(2);
    let evd = eigh(full.excitation_block(2).unwrap().as_ref()).unwrap();
    let source = vec![c64::new(2.0 / (n as f64).sqrt(), 0.0); rows.len()];
    let modes = two_exciton_modes(n, j, a, 1.0).unwrap();
    for (alpha, &e) in modes.energies.iter().enumerate() {
        let weight: f64 = (0..rows.len())
            .filter(|&k| (evd.values[k] - 2.0 - e).abs() < 1e-8)
            .map(|k| (0..rows.len()).map(|i| evd.vectors[(i, k)].conj() * source[i]).sum::<c64>().norm_sqr())
            .sum();
        assert!((weight - modes.s_amp[alpha].powi(2)).abs() < 1e-9, "alpha={}: {weight}", alpha + 1);
    }
}

#[test]
fn amplitudes_show_bound_state_structure_for_twenty_sites() {
    let a_values: Vec<f64> = (0..=24).map(|i| i as f64 * 0.05).collect();
    let table: Vec<Vec<f64>> = a_values.iter().map(|&a| two_exciton_modes(20, -0.2, a, 1.0).unwrap().abs_s_sq()).collect();
    let column = |alpha: usize| table.iter().map(|row| row[alpha - 1]).collect::<Vec<_>>();
    assert!(column(1).windows(2).all(|w| w[1] < w[0]));
    assert!(column(10).windows(2).all(|w| w[1] > w[0]));
    for alpha in 2..=9 {
        let c = column(alpha);
        let (i, _) = c.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap();
        assert!(i > 0 && i < c.len() - 1, "alpha={alpha} maximum at index {i}");
    }
}

#[test]
fn degenerate_modes_without_hopping() {
    let modes = two_exciton_modes(8, 0.0, 0.6, 1.0).unwrap();
    assert_eq!(modes.energies, vec![0.0, 0.0, 0.0, 0.6]);
}

fn exact_two_exciton(n: usize, j: f64, a: f64, gbar: f64) -> (ChargingModel, Propagator) {
    let p = AggregateParams::dimensionless(n, j, a).unwrap();
    let cav = CavityParams::resonant_full(&p);
    let g = gbar / (n as f64).sqrt();
    let model = ChargingModel::new(n, n, true, ZzKernel::Auto).unwrap();
    let h = model.assemble(&p, &cav, g).unwrap();
    let hm = model.molecular_operator(&p).unwrap();
    let psi = initial_vector(model.basis(), n, &p).unwrap();
    let prop = Propagator::new(&h, &hm, &psi, 1.0).unwrap();
    (model, prop)
}

#[test]
fn short_time_two_exciton_population_matches_full_dynamics() {
    let (n, j, a, gbar) = (8, -0.2, 0.5, 0.05);
    let g = gbar / (n as f64).sqrt();
    let modes = two_exciton_modes(n, j, a, 1.0).unwrap();
    let (model, prop) = exact_two_exciton(n, j, a, gbar);
    let range = *model.basis().sector(2).unwrap();
    let mut previous = f64::INFINITY;
    for t in [2.0, 1.0, 0.5, 0.25, 0.1] {
        let psi = prop.state_at(t);
        let exact: f64 = psi[range.start..range.start + range.len].iter().map(|c| c.norm_sqr()).sum();
        let pert: f64 = (1..=modes.len()).map(|al| transition_prob(&modes, al, t, g).unwrap()).sum();
        let error = (exact / pert - 1.0).abs();
        assert!(error < previous, "t={t}: error {error} did not shrink");
        if t <= 0.5 {
            assert!(error < 0.02, "t={t}: exact {exact} vs {pert}");
        }
        previous = error;
    }
}

/// Perturbative two-exciton energy versus the full dynamics at the first
/// local maximum of the perturbative curve. Second order does not reach 10%
/// there: the maximum sits near `omega t = 16`, where `g N t ~ 2` and the
/// photon-dressed vacuum is long depleted.
#[test]
#[ignore = "second-order theory misses the full dynamics by more than 10% at the first maximum"]
fn perturbative_energy_at_first_maximum() {
    let (n, j, a, gbar) = (8, -0.2, 0.5, 0.05);
    let g = gbar / (n as f64).sqrt();
    let modes = two_exciton_modes(n, j, a, 1.0).unwrap();
    let energy = |t: f64| two_exciton_energy(&modes, t, g).unwrap();
    let dt = 0.01;
    let mut t = dt;
    while energy(t + dt) >= energy(t) {
        t += dt;
    }
    let (model, prop) = exact_two_exciton(n, j, a, gbar);
    let hm = model.molecular_operator(&AggregateParams::dimensionless(n, j, a).unwrap()).unwrap();
    let exact = sector_energy(&prop.state_at(t), &hm, model.basis(), 2);
    let pert = energy(t);
    assert!((pert / exact - 1.0).abs() < 0.1, "t={t}: perturbative {pert} vs full {exact}");
}
