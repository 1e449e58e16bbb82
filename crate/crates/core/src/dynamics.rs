//! Spectral time evolution of the charging process.
//!
//! With `H = U D U^dagger` and `c = U^dagger psi(0)`, the stored energy is
//! `E_m(t) = phi^dagger M phi` where `phi = exp(-i D t) c` and
//! `M = U^dagger H_m U`. Times are expressed as `omega t` throughout and the
//! reported densities are `E_m / (N omega)` and `P / (N omega^2)`.

use std::io::Write;

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, Par};
use serde::{Deserialize, Serialize};

use crate::basis::SubspaceBasis;
use crate::error::{Error, Result};
use crate::hamiltonian::HermitianOperator;
use crate::linalg::{eigh, norm};
use crate::params::AggregateParams;

/// Allowed deviation of `|psi(0)|` from one.
pub const NORM_TOL: f64 = 1e-10;
/// Allowed excess of the energy density over its bound before a run is
/// rejected as a blow-up.
pub const BLOW_UP_MARGIN: f64 = 1e-6;
/// Width of the final golden-section bracket, in `omega t`.
pub const REFINE_TOL: f64 = 1e-5;
/// Time points per batched evaluation.
const TIME_CHUNK: usize = 512;

/// Uniform grid of `omega t` values on `[0, t_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub t_max: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { dt: 0.01, t_max: 100.0 }
    }
}

impl TimeGrid {
    pub fn new(dt: f64, t_max: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(Error::invalid("t_max", format!("must be >= 0, got {t_max}")));
        }
        Ok(Self { dt, t_max })
    }

    pub fn len(&self) -> usize {
        (self.t_max / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dt).collect()
    }
}

/// Energy scale used to turn energies into densities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityScale {
    pub n_sites: usize,
    pub omega: f64,
}

impl From<&AggregateParams> for DensityScale {
    fn from(p: &AggregateParams) -> Self {
        Self { n_sites: p.n_sites, omega: p.omega }
    }
}

impl DensityScale {
    fn energy(&self) -> f64 {
        self.n_sites as f64 * self.omega
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub e_density: Vec<f64>,
    pub p_density: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "omega_t,e_density,p_density")?;
        for i in 0..self.len() {
            writeln!(w, "{:?},{:?},{:?}", self.times[i], self.e_density[i], self.p_density[i])?;
        }
        Ok(())
    }
}

/// A refined maximum of a time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub value: f64,
    pub omega_t: f64,
    /// The maximum sits on an end of the window.
    pub at_boundary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargingSummary {
    pub e_max_density: f64,
    pub t_at_e_max: f64,
    pub e_max_at_boundary: bool,
    pub p_max_density: f64,
    pub t_at_p_max: f64,
    pub p_max_at_boundary: bool,
    pub window: [f64; 2],
}

impl ChargingSummary {
    pub fn from_maxima(e: Maximum, p: Maximum, window: [f64; 2]) -> Self {
        Self {
            e_max_density: e.value,
            t_at_e_max: e.omega_t,
            e_max_at_boundary: e.at_boundary,
            p_max_density: p.value,
            t_at_p_max: p.omega_t,
            p_max_at_boundary: p.at_boundary,
            window,
        }
    }
}

/// Unit vector on `|n_ph> (x) |vac>`.
pub fn initial_vector(basis: &SubspaceBasis, n_ph: usize, params: &AggregateParams) -> Result<Vec<c64>> {
    if params.interaction <= -params.omega {
        return Err(Error::NonVacuumGroundState { interaction: params.interaction / params.omega });
    }
    if basis.n_total() != n_ph {
        return Err(Error::BasisMismatch(format!(
            "initial state with {n_ph} photons needs the Ntot = {n_ph} subspace, got {}",
            basis.n_total()
        )));
    }
    let vacuum = crate::basis::FermionConfig::vacuum(basis.n_sites());
    let row = basis.position(&vacuum).ok_or_else(|| Error::BasisMismatch("basis lacks the exciton vacuum".into()))?;
    let mut psi = vec![c64::new(0.0, 0.0); basis.dim()];
    psi[row] = c64::new(1.0, 0.0);
    Ok(psi)
}

/// Spectral propagator for one Hamiltonian, observable and initial state.
#[derive(Clone, Debug)]
pub struct Propagator {
    energies: Vec<f64>,
    vectors: Mat<c64>,
    coeffs: Vec<c64>,
    observable: Mat<c64>,
    omega: f64,
}

impl Propagator {
    pub fn new(h: &HermitianOperator, observable: &HermitianOperator, psi0: &[c64], omega: f64) -> Result<Self> {
        let dim = h.dim();
        if observable.dim() != dim || psi0.len() != dim {
            return Err(Error::BasisMismatch(format!(
                "H ({dim}), observable ({}) and state ({}) dimensions differ",
                observable.dim(),
                psi0.len()
            )));
        }
        let deviation = (norm(psi0) - 1.0).abs();
        if deviation > NORM_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        let evd = eigh(h.matrix())?;
        let u = evd.vectors;
        let coeffs = (0..dim)
            .map(|a| (0..dim).map(|i| u[(i, a)].conj() * psi0[i]).sum())
            .collect();
        let mut tmp = Mat::<c64>::zeros(dim, dim);
        matmul(tmp.as_mut(), Accum::Replace, observable.matrix(), u.as_ref(), c64::new(1.0, 0.0), Par::Seq);
        let mut m = Mat::<c64>::zeros(dim, dim);
        matmul(m.as_mut(), Accum::Replace, u.adjoint(), tmp.as_ref(), c64::new(1.0, 0.0), Par::Seq);
        Ok(Self { energies: evd.values, vectors: u, coeffs, observable: m, omega })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Eigenvalues of the Hamiltonian.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn phased(&self, omega_t: f64) -> Vec<c64> {
        let t = omega_t / self.omega;
        self.energies.iter().zip(&self.coeffs).map(|(&e, &c)| c64::cis(-e * t) * c).collect()
    }

    /// `<psi(t)| H_m |psi(t)>` (absolute energy).
    pub fn energy_at(&self, omega_t: f64) -> f64 {
        let phi = self.phased(omega_t);
        let dim = self.dim();
        let mut acc = 0.0;
        for j in 0..dim {
            let mut col = c64::new(0.0, 0.0);
            for i in 0..dim {
                col += phi[i].conj() * self.observable[(i, j)];
            }
            acc += (col * phi[j]).re;
        }
        acc
    }

    /// `psi(t)` in the original basis.
    pub fn state_at(&self, omega_t: f64) -> Vec<c64> {
        let phi = self.phased(omega_t);
        crate::linalg::mat_vec(self.vectors.as_ref(), &phi)
    }

    /// Total energy `<psi|H|psi>`, conserved by construction.
    pub fn total_energy(&self) -> f64 {
        self.energies.iter().zip(&self.coeffs).map(|(e, c)| e * c.norm_sqr()).sum()
    }

    /// Absolute energies `E_m` on the grid, evaluated in batches.
    pub fn energies_on(&self, times: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let mut out = Vec::with_capacity(times.len());
        for chunk in times.chunks(TIME_CHUNK) {
            let phi = Mat::<c64>::from_fn(dim, chunk.len(), |a, j| {
                c64::cis(-self.energies[a] * chunk[j] / self.omega) * self.coeffs[a]
            });
            let mut mphi = Mat::<c64>::zeros(dim, chunk.len());
            matmul(mphi.as_mut(), Accum::Replace, self.observable.as_ref(), phi.as_ref(), c64::new(1.0, 0.0), Par::Seq);
            for j in 0..chunk.len() {
                let mut acc = 0.0;
                for a in 0..dim {
                    let (p, q) = (phi[(a, j)], mphi[(a, j)]);
                    acc += p.re * q.re + p.im * q.im;
                }
                out.push(acc);
            }
        }
        out
    }

    /// Trajectory on the grid. Aborts with [`Error::BlowUp`] if the energy
    /// density exceeds `bound` by more than [`BLOW_UP_MARGIN`].
    pub fn trajectory(&self, grid: &TimeGrid, scale: DensityScale, bound: Option<f64>) -> Result<Trajectory> {
        let times = grid.points();
        let energies = self.energies_on(&times);
        let e_density: Vec<f64> = energies.iter().map(|e| e / scale.energy()).collect();
        if let Some(bound) = bound {
            if let Some((i, &e)) = e_density.iter().enumerate().find(|(_, &e)| e > bound + BLOW_UP_MARGIN || !e.is_finite()) {
                return Err(Error::BlowUp { time: times[i], e_density: e, bound });
            }
        }
        let p_density = power_density(&times, &e_density);
        Ok(Trajectory { times, e_density, p_density })
    }

    /// Trajectory plus refined maxima over the grid window.
    pub fn charge(&self, grid: &TimeGrid, scale: DensityScale, bound: Option<f64>) -> Result<(Trajectory, ChargingSummary)> {
        let traj = self.trajectory(grid, scale, bound)?;
        let summary = self.summarize(&traj, scale);
        Ok((traj, summary))
    }

    /// Refine the grid maxima of a trajectory produced by this propagator.
    pub fn summarize(&self, traj: &Trajectory, scale: DensityScale) -> ChargingSummary {
        let e = |t: f64| self.energy_at(t) / scale.energy();
        let p = |t: f64| if t > 0.0 { e(t) / t } else { 0.0 };
        let window = [traj.times[0], *traj.times.last().unwrap_or(&0.0)];
        let e_max = find_maximum(&e, &traj.times, &traj.e_density, window);
        let p_max = find_maximum(&p, &traj.times, &traj.p_density, window);
        ChargingSummary::from_maxima(e_max, p_max, window)
    }
}

/// `P / (N omega^2) = e_density / (omega t)`, zero at `t = 0`.
pub fn power_density(times: &[f64], e_density: &[f64]) -> Vec<f64> {
    times.iter().zip(e_density).map(|(&t, &e)| if t > 0.0 { e / t } else { 0.0 }).collect()
}

/// Trajectory of `observable` under `h` from `psi0` on `grid`.
pub fn evolve_observables(
    h: &HermitianOperator,
    observable: &HermitianOperator,
    psi0: &[c64],
    grid: &TimeGrid,
    scale: DensityScale,
) -> Result<Trajectory> {
    Propagator::new(h, observable, psi0, scale.omega)?.trajectory(grid, scale, None)
}

/// Global maximum of `samples` (taken at `times`), refined by golden-section
/// search of `f` on the neighbouring grid cells.
pub fn find_maximum(f: &impl Fn(f64) -> f64, times: &[f64], samples: &[f64], window: [f64; 2]) -> Maximum {
    let Some((best, _)) = samples.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0))) else {
        return Maximum { value: f64::NAN, omega_t: f64::NAN, at_boundary: false };
    };
    let lo = if best > 0 { times[best - 1] } else { times[best] }.max(window[0]);
    let hi = if best + 1 < times.len() { times[best + 1] } else { times[best] }.min(window[1]);
    let (mut t_best, mut v_best) = (times[best], samples[best]);
    if hi > lo {
        let (t, v) = golden_section_max(f, lo, hi, REFINE_TOL);
        if v > v_best {
            t_best = t;
            v_best = v;
        }
        // The bracket ends are valid candidates too.
        for t in [lo, hi] {
            let v = f(t);
            if v > v_best {
                t_best = t;
                v_best = v;
            }
        }
    }
    let edge = REFINE_TOL.max(1e-12 * window[1].abs());
    let at_boundary = (t_best - window[0]).abs() <= edge || (window[1] - t_best).abs() <= edge;
    Maximum { value: v_best, omega_t: t_best, at_boundary }
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `<psi| H_m |psi>` restricted to the exciton-number block `m`.
pub fn sector_energy(state: &[c64], observable: &HermitianOperator, basis: &SubspaceBasis, m: usize) -> f64 {
    let Some(range) = basis.sector(m) else {
        return 0.0;
    };
    let block = observable.matrix().submatrix(range.start, range.start, range.len, range.len);
    let part = &state[range.start..range.start + range.len];
    crate::linalg::sandwich(block, part, part).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::ChargingModel;
    use crate::blocks::ZzKernel;
    use crate::params::{CavityParams, CouplingSpec};

    #[test]
    fn default_grid_resolution() {
        let g = TimeGrid::default();
        assert_eq!(g.len(), 10001);
        assert!((g.points()[10000] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn monotone_function_peaks_at_boundary() {
        let grid = TimeGrid::default();
        let t = grid.points();
        let y: Vec<f64> = t.iter().map(|x| x * x).collect();
        let m = find_maximum(&|x: f64| x * x, &t, &y, [0.0, 100.0]);
        assert!(m.at_boundary);
        assert!((m.omega_t - 100.0).abs() < 1e-9);
    }

    #[test]
    fn interior_maximum_is_refined() {
        let grid = TimeGrid::new(0.1, 10.0).unwrap();
        let t = grid.points();
        let f = |x: f64| -(x - 3.2718).powi(2);
        let y: Vec<f64> = t.iter().map(|&x| f(x)).collect();
        let m = find_maximum(&f, &t, &y, [0.0, 10.0]);
        assert!(!m.at_boundary);
        assert!((m.omega_t - 3.2718).abs() < 1e-4);
    }

    #[test]
    fn jaynes_cummings_closed_form() {
        let p = AggregateParams::new(1, 1.0, 0.0, 0.0).unwrap();
        let cav = CavityParams::new(1.0, 1).unwrap();
        let g = 0.05;
        let model = ChargingModel::new(1, 1, false, ZzKernel::Auto).unwrap();
        let h = model.assemble(&p, &cav, g).unwrap();
        let hm = model.molecular_operator(&p).unwrap();
        let psi = initial_vector(model.basis(), 1, &p).unwrap();
        let prop = Propagator::new(&h, &hm, &psi, 1.0).unwrap();
        let grid = TimeGrid::default();
        let (traj, summary) = prop.charge(&grid, (&p).into(), Some(1.0)).unwrap();
        for (t, e) in traj.times.iter().zip(&traj.e_density) {
            assert!((e - (g * t).sin().powi(2)).abs() < 1e-10);
        }
        assert!((summary.e_max_density - 1.0).abs() < 1e-10);
        assert!(((g * summary.t_at_e_max).sin().powi(2) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_unnormalized_state_and_non_vacuum_regime() {
        let p = AggregateParams::dimensionless(4, -0.2, 0.3).unwrap();
        let model = ChargingModel::new(4, 4, true, ZzKernel::Auto).unwrap();
        let h = model.assemble(&p, &CavityParams::resonant_full(&p), 0.1).unwrap();
        let mut psi = initial_vector(model.basis(), 4, &p).unwrap();
        assert_eq!(psi.len(), 6);
        assert_eq!(psi[0], c64::new(1.0, 0.0));
        psi[0] = c64::new(1.1, 0.0);
        assert!(matches!(Propagator::new(&h, &h, &psi, 1.0), Err(Error::NotNormalized { .. })));
        let bad = AggregateParams::dimensionless(4, -0.2, -1.0).unwrap();
        assert!(matches!(initial_vector(model.basis(), 4, &bad), Err(Error::NonVacuumGroundState { .. })));
    }

    #[test]
    fn decoupled_cavity_stores_nothing() {
        let p = AggregateParams::dimensionless(6, -0.2, 0.8).unwrap();
        let model = ChargingModel::new(6, 6, true, ZzKernel::Auto).unwrap();
        let g = CouplingSpec::norm_i(0.0).unwrap().resolve(&p);
        let h = model.assemble(&p, &CavityParams::resonant_full(&p), g).unwrap();
        let hm = model.molecular_operator(&p).unwrap();
        let psi = initial_vector(model.basis(), 6, &p).unwrap();
        let traj = evolve_observables(&h, &hm, &psi, &TimeGrid::new(0.5, 50.0).unwrap(), (&p).into()).unwrap();
        assert!(traj.e_density.iter().all(|e| e.abs() < 1e-14));
    }

    #[test]
    fn csv_header_and_rows() {
        let traj = Trajectory { times: vec![0.0, 0.5], e_density: vec![0.0, 0.25], p_density: vec![0.0, 0.5] };
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "omega_t,e_density,p_density\n0.0,0.0,0.0\n0.5,0.25,0.5\n");
    }
}
