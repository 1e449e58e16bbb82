//! Dense Hamiltonians: the molecular operator `H_m` per exciton number and
//! momentum, and the full light-matter Hamiltonian in a fixed excitation
//! subspace.
//!
//! `H_m` is normalized so the exciton vacuum has exactly zero energy:
//! `H_m = sum_K (omega + 2J cos K) n_K + A sum_j n_j n_{j+1}`, with the
//! interaction written through the closed-form longitudinal block as
//! `sum_j n_j n_{j+1} = Gbar + m - N/4`.

use std::collections::BTreeMap;
use std::sync::Arc;

use faer::{c64, Mat, MatRef};

use crate::basis::{build_subspace, momentum_grid, parity, sector_configs, sector_momenta, FermionConfig, SubspaceBasis};
use crate::blocks::{lowering_block, pair_density_block, symmetrize, ZzKernel};
use crate::error::{Error, Result};
use crate::linalg::{eigh, eigvalsh, is_positive_definite, EigenDecomposition};
use crate::matrix_elements::{mask_momentum, MatElemCache};
use crate::params::{AggregateParams, CavityParams};

/// Dense complex Hermitian matrix together with the basis it acts on.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    matrix: Mat<c64>,
    basis: Option<Arc<SubspaceBasis>>,
}

impl HermitianOperator {
    /// Wrap a matrix, mirroring its upper triangle into the lower one.
    pub fn from_upper(mut matrix: Mat<c64>, basis: Option<Arc<SubspaceBasis>>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::BasisMismatch(format!("{}x{} matrix is not square", matrix.nrows(), matrix.ncols())));
        }
        if let Some(b) = &basis {
            if b.dim() != matrix.nrows() {
                return Err(Error::BasisMismatch(format!("matrix dim {} vs basis dim {}", matrix.nrows(), b.dim())));
            }
        }
        symmetrize(&mut matrix);
        Ok(Self { matrix, basis })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn basis(&self) -> Option<&Arc<SubspaceBasis>> {
        self.basis.as_ref()
    }

    pub fn eigen(&self) -> Result<EigenDecomposition> {
        eigh(self.matrix.as_ref())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigvalsh(self.matrix.as_ref())
    }
}

/// Pieces of `H_m` within one exciton number (all momenta, or one): the
/// band sums `sum cos K` and the pair-density block. `H_m` for any `(J, A)`
/// is then a cheap linear combination.
#[derive(Clone, Debug)]
pub struct MolecularSector {
    pub m: usize,
    pub momentum: Option<i64>,
    pub configs: Vec<FermionConfig>,
    pub band: Vec<f64>,
    pub pair_density: Mat<c64>,
}

impl MolecularSector {
    pub fn build(cache: &MatElemCache, m: usize, momentum: Option<i64>, kernel: ZzKernel) -> Result<Self> {
        let n_sites = cache.n_sites();
        if m > n_sites {
            return Err(Error::invalid("m", format!("exciton number {m} exceeds N = {n_sites}")));
        }
        if m >= 2 && n_sites == 1 {
            return Err(Error::invalid("m", "single site holds at most one exciton"));
        }
        let configs = sector_configs(n_sites, m, momentum);
        Self::from_configs(cache, m, momentum, configs, kernel)
    }

    /// Build over an explicit configuration list (any mix of momenta).
    pub fn from_configs(
        cache: &MatElemCache,
        m: usize,
        momentum: Option<i64>,
        configs: Vec<FermionConfig>,
        kernel: ZzKernel,
    ) -> Result<Self> {
        let n_sites = cache.n_sites();
        let grid = momentum_grid(n_sites, parity(m));
        let unit = std::f64::consts::PI / n_sites as f64;
        let band = configs.iter().map(|c| c.momenta().iter().map(|&k| (k as f64 * unit).cos()).sum()).collect();

        // Group by momentum so the closed form sees single sectors only.
        let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, c) in configs.iter().enumerate() {
            groups.entry(mask_momentum(&grid, c.mask(), n_sites)).or_default().push(i);
        }
        let mut pair_density = Mat::<c64>::zeros(configs.len(), configs.len());
        if n_sites >= 2 {
            for idx in groups.values() {
                let sub: Vec<FermionConfig> = idx.iter().map(|&i| configs[i]).collect();
                let block = pair_density_block(cache, &sub, kernel)?;
                for (a, &i) in idx.iter().enumerate() {
                    for (b, &j) in idx.iter().enumerate() {
                        pair_density[(i, j)] = block[(a, b)];
                    }
                }
            }
        }
        Ok(Self { m, momentum, configs, band, pair_density })
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    /// Dense `H_m` restricted to this sector.
    pub fn molecular(&self, params: &AggregateParams) -> Mat<c64> {
        let z = self.dim();
        let base = self.m as f64 * params.omega;
        Mat::<c64>::from_fn(z, z, |i, j| {
            let mut v = self.pair_density[(i, j)] * params.interaction;
            if i == j {
                v += base + 2.0 * params.hopping * self.band[i];
            }
            v
        })
    }
}

/// `H_m` within `m` excitons, optionally restricted to one total momentum.
pub fn molecular_block(params: &AggregateParams, m: usize, momentum_sector: Option<i64>) -> Result<HermitianOperator> {
    let cache = MatElemCache::new(params.n_sites);
    let sector = MolecularSector::build(&cache, m, momentum_sector, ZzKernel::Auto)?;
    HermitianOperator::from_upper(sector.molecular(params), None)
}

/// One level of the molecular spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub energy: f64,
    /// Exciton number of the sector the level belongs to.
    pub m: usize,
    /// Total momentum of the sector, in units of `pi / N`.
    pub momentum: i64,
    /// Excitations above the ground sector, `|m - m_ground|`.
    pub n_ex: usize,
    /// Number of levels in the whole spectrum within the degeneracy
    /// tolerance of this one (including itself).
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub levels: Vec<Level>,
    pub ground_energy: f64,
    /// Exciton numbers of all sectors reaching the ground energy.
    pub ground_sectors: Vec<usize>,
}

/// Energies closer than this count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// All eigenvalues of `H_m`, sector by sector, for every exciton number and
/// momentum.
pub struct MolecularSpectrumModel {
    sectors: Vec<MolecularSector>,
    n_sites: usize,
}

impl MolecularSpectrumModel {
    pub fn new(n_sites: usize, kernel: ZzKernel) -> Result<Self> {
        let cache = MatElemCache::new(n_sites);
        let mut sectors = Vec::new();
        for m in 0..=n_sites {
            for k in sector_momenta(n_sites, m) {
                sectors.push(MolecularSector::build(&cache, m, Some(k), kernel)?);
            }
        }
        Ok(Self { sectors, n_sites })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn sectors(&self) -> &[MolecularSector] {
        &self.sectors
    }

    /// The full spectrum, lowest `n_levels` levels reported.
    pub fn spectrum(&self, params: &AggregateParams, n_levels: usize) -> Result<SpectrumResult> {
        if params.n_sites != self.n_sites {
            return Err(Error::BasisMismatch("spectrum model built for another N".into()));
        }
        if n_levels > 1usize << self.n_sites {
            return Err(Error::invalid("n_levels", format!("at most 2^N = {}", 1usize << self.n_sites)));
        }
        let mut all: Vec<(f64, usize, i64)> = Vec::with_capacity(1 << self.n_sites);
        for s in &self.sectors {
            let values = eigvalsh(s.molecular(params).as_ref())?;
            all.extend(values.into_iter().map(|e| (e, s.m, s.momentum.unwrap_or(0))));
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let ground_energy = all[0].0;
        let mut ground_sectors: Vec<usize> =
            all.iter().take_while(|l| l.0 - ground_energy <= DEGENERACY_TOL).map(|l| l.1).collect();
        ground_sectors.sort_unstable();
        ground_sectors.dedup();
        let m_ground = ground_sectors[0];
        let energies: Vec<f64> = all.iter().map(|l| l.0).collect();
        let levels = all
            .iter()
            .take(n_levels)
            .map(|&(energy, m, momentum)| {
                let lo = energies.partition_point(|&e| e < energy - DEGENERACY_TOL);
                let hi = energies.partition_point(|&e| e <= energy + DEGENERACY_TOL);
                Level { energy, m, momentum, n_ex: m.abs_diff(m_ground), multiplicity: hi - lo }
            })
            .collect();
        Ok(SpectrumResult { levels, ground_energy, ground_sectors })
    }

    /// True iff some sector other than the vacuum has an eigenvalue below
    /// `-eps`, decided by Cholesky factorizations rather than eigensolves.
    pub fn has_negative_level(&self, params: &AggregateParams, eps: f64) -> bool {
        self.sectors.iter().rev().filter(|s| s.m > 0).any(|s| !is_positive_definite(s.molecular(params).as_ref(), eps))
    }

    /// Bisection in `A` for the point where the ground energy leaves zero.
    ///
    /// Requires a negative level at `a_lo` and none at `a_hi`.
    pub fn locate_crossing(&self, hopping: f64, omega: f64, a_lo: f64, a_hi: f64, tol: f64) -> Result<Crossing> {
        let params_at = |a: f64| AggregateParams::new(self.n_sites, omega, hopping, a);
        let eps = 1e-9 * omega;
        if !self.has_negative_level(&params_at(a_lo)?, eps) || self.has_negative_level(&params_at(a_hi)?, eps) {
            return Err(Error::invalid("bracket", format!("[{a_lo}, {a_hi}] does not bracket the level crossing")));
        }
        let (mut lo, mut hi) = (a_lo, a_hi);
        let mut iterations = 0;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.has_negative_level(&params_at(mid)?, eps) {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        Ok(Crossing { a_cross: 0.5 * (lo + hi), bracket: (lo, hi), iterations })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub a_cross: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Lowest `n_levels` levels of `H_m` across every exciton number and
/// momentum sector.
pub fn molecular_spectrum(params: &AggregateParams, n_levels: usize) -> Result<SpectrumResult> {
    MolecularSpectrumModel::new(params.n_sites, ZzKernel::Auto)?.spectrum(params, n_levels)
}

/// The parameter-independent pieces of the light-matter Hamiltonian in one
/// excitation subspace, reusable across `(J, A, g, omega_c)`.
#[derive(Clone, Debug)]
pub struct ChargingModel {
    basis: Arc<SubspaceBasis>,
    sectors: Vec<MolecularSector>,
    /// `lowering[m]` couples exciton numbers `m` (rows) and `m + 1`.
    lowering: Vec<Mat<c64>>,
}

impl ChargingModel {
    pub fn new(n_sites: usize, n_total: usize, zero_momentum: bool, kernel: ZzKernel) -> Result<Self> {
        let basis = Arc::new(build_subspace(n_sites, n_total, zero_momentum)?);
        let cache = MatElemCache::new(n_sites);
        let momentum = zero_momentum.then_some(0);
        let mut sectors = Vec::new();
        for s in basis.sectors() {
            if s.m >= 2 && n_sites == 1 {
                return Err(Error::invalid("N", "single site holds at most one exciton"));
            }
            sectors.push(MolecularSector::from_configs(&cache, s.m, momentum, basis.configs(s.m), kernel)?);
        }
        let lowering = sectors
            .windows(2)
            .map(|w| lowering_block(&cache, &w[0].configs, &w[1].configs))
            .collect::<Result<_>>()?;
        Ok(Self { basis, sectors, lowering })
    }

    pub fn basis(&self) -> &Arc<SubspaceBasis> {
        &self.basis
    }

    pub fn sectors(&self) -> &[MolecularSector] {
        &self.sectors
    }

    /// `F` block between exciton numbers `m` and `m + 1`.
    pub fn lowering(&self, m: usize) -> Option<MatRef<'_, c64>> {
        self.lowering.get(m).map(|b| b.as_ref())
    }

    fn check(&self, params: &AggregateParams) -> Result<()> {
        if params.n_sites != self.basis.n_sites() {
            return Err(Error::BasisMismatch(format!(
                "model built for N = {} used with N = {}",
                self.basis.n_sites(),
                params.n_sites
            )));
        }
        Ok(())
    }

    /// `H_m` as an observable on the subspace (block diagonal in `m`).
    pub fn molecular_operator(&self, params: &AggregateParams) -> Result<HermitianOperator> {
        self.check(params)?;
        let dim = self.basis.dim();
        let mut h = Mat::<c64>::zeros(dim, dim);
        for (s, range) in self.sectors.iter().zip(self.basis.sectors()) {
            let block = s.molecular(params);
            h.as_mut().submatrix_mut(range.start, range.start, range.len, range.len).copy_from(&block);
        }
        HermitianOperator::from_upper(h, Some(self.basis.clone()))
    }

    /// Largest eigenvalue of `H_m` on the subspace.
    pub fn molecular_max_level(&self, params: &AggregateParams) -> Result<f64> {
        self.check(params)?;
        let mut top = f64::NEG_INFINITY;
        for s in &self.sectors {
            if let Some(&e) = eigvalsh(s.molecular(params).as_ref())?.last() {
                top = top.max(e);
            }
        }
        Ok(top)
    }

    /// Light-matter Hamiltonian: diagonal blocks `H_m + omega_c (Ntot - m)`,
    /// off-diagonal blocks `g sqrt(Ntot - m) F` between `m` and `m + 1`.
    pub fn assemble(&self, params: &AggregateParams, cavity: &CavityParams, g: f64) -> Result<HermitianOperator> {
        self.check(params)?;
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::invalid("g", format!("must be >= 0, got {g}")));
        }
        let n_total = self.basis.n_total();
        let dim = self.basis.dim();
        let mut h = Mat::<c64>::zeros(dim, dim);
        let ranges = self.basis.sectors();
        for (idx, (s, range)) in self.sectors.iter().zip(ranges).enumerate() {
            let mut block = s.molecular(params);
            let photon_energy = cavity.omega_c * (n_total - s.m) as f64;
            for i in 0..block.nrows() {
                block[(i, i)] += photon_energy;
            }
            h.as_mut().submatrix_mut(range.start, range.start, range.len, range.len).copy_from(&block);
            if let Some(f) = self.lowering.get(idx) {
                let next = &ranges[idx + 1];
                let ladder = g * ((n_total - s.m) as f64).sqrt();
                let coupling = Mat::<c64>::from_fn(f.nrows(), f.ncols(), |i, j| f[(i, j)] * ladder);
                h.as_mut().submatrix_mut(range.start, next.start, range.len, next.len).copy_from(&coupling);
            }
        }
        HermitianOperator::from_upper(h, Some(self.basis.clone()))
    }
}

/// Light-matter Hamiltonian in the `Ntot`-excitation subspace.
pub fn assemble_fd(
    params: &AggregateParams,
    cavity: &CavityParams,
    g: f64,
    n_total: usize,
    zero_momentum: bool,
) -> Result<HermitianOperator> {
    ChargingModel::new(params.n_sites, n_total, zero_momentum, ZzKernel::Auto)?.assemble(params, cavity, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, j: f64, a: f64) -> AggregateParams {
        AggregateParams::dimensionless(n, j, a).unwrap()
    }

    #[test]
    fn vacuum_block_is_zero() {
        let h = molecular_block(&params(6, -0.2, 0.7), 0, None).unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.matrix()[(0, 0)], c64::new(0.0, 0.0));
    }

    #[test]
    fn full_block_is_n_times_a_plus_omega() {
        for n in 2..=9 {
            let p = params(n, -0.2, 0.37);
            let e = molecular_block(&p, n, None).unwrap().eigenvalues().unwrap();
            assert_eq!(e.len(), 1);
            assert!((e[0] - n as f64 * 1.37).abs() < 1e-12, "N={n}: {}", e[0]);
        }
    }

    #[test]
    fn decoupled_spectrum_is_union_of_shifted_sectors() {
        let p = params(5, -0.3, 0.4);
        let cav = CavityParams::new(1.1, 3).unwrap();
        let mut got = assemble_fd(&p, &cav, 0.0, 3, false).unwrap().eigenvalues().unwrap();
        let mut expected = Vec::new();
        for m in 0..=3 {
            let e = molecular_block(&p, m, None).unwrap().eigenvalues().unwrap();
            expected.extend(e.into_iter().map(|x| x + 1.1 * (3 - m) as f64));
        }
        expected.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn jaynes_cummings_doublet() {
        let p = AggregateParams::new(1, 1.0, 0.0, 0.0).unwrap();
        let cav = CavityParams::new(1.0, 1).unwrap();
        // A single site has K = 0 so the bare exciton energy is omega + 2J.
        let e = assemble_fd(&p, &cav, 0.3, 1, false).unwrap().eigenvalues().unwrap();
        assert!((e[0] - 0.7).abs() < 1e-14 && (e[1] - 1.3).abs() < 1e-14);
    }

    #[test]
    fn operators_are_hermitian_by_construction() {
        let p = params(7, -0.2, 0.8);
        let cav = CavityParams::resonant_full(&p);
        let h = assemble_fd(&p, &cav, 0.4, 7, true).unwrap();
        assert_eq!(crate::linalg::hermiticity_defect(h.matrix()), 0.0);
    }

    #[test]
    fn spectrum_has_zero_vacuum_level_above_crossing() {
        let s = molecular_spectrum(&params(8, -0.05, -0.5), 10).unwrap();
        assert_eq!(s.ground_energy, 0.0);
        assert_eq!(s.ground_sectors, vec![0]);
        assert_eq!(s.levels[0].n_ex, 0);
    }

    #[test]
    fn spectrum_counts_every_state() {
        let p = params(6, -0.2, 0.3);
        let s = molecular_spectrum(&p, 64).unwrap();
        assert_eq!(s.levels.len(), 64);
        assert!(s.levels.windows(2).all(|w| w[0].energy <= w[1].energy));
    }
}
