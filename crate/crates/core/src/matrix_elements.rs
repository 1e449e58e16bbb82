//! Closed-form matrix elements of the collective lowering operator
//! `F = <chi|sum_j S^-_j|eta>` and of the nearest-neighbour longitudinal
//! coupling `Gbar = <a|sum_j S^z_j S^z_{j+1}|b>` between free-fermion
//! eigenstates.
//!
//! The eigenstates are the Slater determinants
//! `psi(x_1..x_n) = N^{-n/2} det[exp(i K_a x_b)]` over ascending sites
//! `x = 0..N-1` and ascending orbitals, which is the phase convention under
//! which the closed forms hold without extra signs.

use std::collections::HashMap;
use std::sync::RwLock;

use faer::{c64, MatMut};

use crate::basis::{combinations, momentum_grid, parity, reduce, FermionConfig, MomentumIndex};
use crate::error::{Error, Result};

/// Smallest tolerated `|1 - exp(-i(K - K'))|` in the h-function denominator.
pub const GRID_COLLISION_TOL: f64 = 1e-12;
/// Largest tolerated magnitude of any h-function intermediate.
pub const OVERFLOW_LIMIT: f64 = 1e280;

/// `1` iff the momentum is a multiple of `2 pi`.
pub fn delta_2pi(delta: MomentumIndex) -> u8 {
    u8::from(delta.is_zero())
}

/// `sum K(a) - sum K(b)` in integer units.
pub fn momentum_diff(a: &FermionConfig, b: &FermionConfig) -> MomentumIndex {
    let n_sites = a.n_sites();
    let sum = |c: &FermionConfig| c.momenta().iter().sum::<i64>();
    MomentumIndex::new(sum(a) - sum(b), n_sites)
}

/// Phase factors `exp(i K)` of one parity grid, by 0-based orbital.
fn phases(n_sites: usize, sigma: i32) -> Vec<c64> {
    momentum_grid(n_sites, sigma)
        .into_iter()
        .map(|k| c64::cis(k as f64 * std::f64::consts::PI / n_sites as f64))
        .collect()
}

/// Vandermonde-type product `prod_{j > j'} (z_j - z_j')` over ascending
/// orbitals.
fn vandermonde(z: &[c64], occ: u32, n_sites: usize) -> Result<c64> {
    let idx: Vec<usize> = (0..n_sites).filter(|&i| occ >> i & 1 == 1).collect();
    let mut prod = c64::new(1.0, 0.0);
    for (a, &j) in idx.iter().enumerate() {
        for &jp in &idx[..a] {
            prod *= z[j] - z[jp];
        }
    }
    check_overflow(prod)
}

fn check_overflow(z: c64) -> Result<c64> {
    let magnitude = z.norm();
    if !(magnitude < OVERFLOW_LIMIT) {
        return Err(Error::Overflow { magnitude });
    }
    Ok(z)
}

/// Precomputed grid data for one ring size. Pure and cheap to rebuild.
#[derive(Clone, Debug)]
struct Grids {
    n_sites: usize,
    /// `exp(i K)` for even and odd particle numbers.
    even: Vec<c64>,
    odd: Vec<c64>,
}

impl Grids {
    fn new(n_sites: usize) -> Self {
        Self { n_sites, even: phases(n_sites, 1), odd: phases(n_sites, -1) }
    }

    fn for_count(&self, n: usize) -> &[c64] {
        if parity(n) == 1 {
            &self.even
        } else {
            &self.odd
        }
    }

    /// `1 / prod_{i,j} (1 - exp(-i(K_eta_j - K_chi_i)))` factor for a single
    /// outer orbital `j` against the occupied orbitals of `chi`.
    fn inverse_denominator(&self, eta_grid: &[c64], j: usize, chi_grid: &[c64], chi: u32) -> Result<c64> {
        let mut prod = c64::new(1.0, 0.0);
        for i in (0..self.n_sites).filter(|&i| chi >> i & 1 == 1) {
            // exp(-i(K_eta - K_chi)) = conj(z_eta) * z_chi for unit phases.
            let factor = c64::new(1.0, 0.0) - eta_grid[j].conj() * chi_grid[i];
            let magnitude = factor.norm();
            if magnitude < GRID_COLLISION_TOL {
                return Err(Error::GridCollision { magnitude });
            }
            prod *= factor;
        }
        Ok(check_overflow(prod)?.inv())
    }

    fn h(&self, eta: &FermionConfig, chi: &FermionConfig) -> Result<c64> {
        if eta.n() != chi.n() + 1 {
            return Err(Error::MalformedConfig(format!(
                "h-function needs |eta| = |chi| + 1, got {} and {}",
                eta.n(),
                chi.n()
            )));
        }
        let eg = self.for_count(eta.n());
        let cg = self.for_count(chi.n());
        let conj_chi: Vec<c64> = cg.iter().map(|z| z.conj()).collect();
        let mut value = vandermonde(&conj_chi, chi.mask(), self.n_sites)? * vandermonde(eg, eta.mask(), self.n_sites)?;
        for j in eta.orbitals() {
            value = check_overflow(value * self.inverse_denominator(eg, j, cg, chi.mask())?)?;
        }
        Ok(value)
    }
}

/// The h-function between a fixed list of `m`-exciton configurations and
/// any `(m+1)`-exciton configuration. The denominators depend only on the
/// orbital pair, so each `chi` keeps `R_chi[j] = prod_{i in chi}
/// 1 / (1 - conj(z_j) z_i)` and an entry costs `m + 1` products.
#[derive(Clone, Debug)]
pub struct HBatch {
    n_sites: usize,
    m: usize,
    eta_grid: Vec<c64>,
    /// `vandermonde(conj(z), chi)` per `chi`.
    chi_factor: Vec<c64>,
    /// `R_chi[j]`, row `chi`, column `j`.
    rows: Vec<c64>,
}

impl HBatch {
    fn new(grids: &Grids, chis: &[FermionConfig]) -> Result<Self> {
        let n_sites = grids.n_sites;
        let m = chis.first().map(|c| c.n()).unwrap_or(0);
        if let Some(bad) = chis.iter().find(|c| c.n() != m || c.n_sites() != n_sites) {
            return Err(Error::MalformedConfig(format!("batch mixes configurations: {:?}", bad.tuple())));
        }
        let eta_grid = grids.for_count(m + 1).to_vec();
        let chi_grid = grids.for_count(m);
        let mut inverse = vec![c64::new(0.0, 0.0); n_sites * n_sites];
        for j in 0..n_sites {
            for i in 0..n_sites {
                let factor = c64::new(1.0, 0.0) - eta_grid[j].conj() * chi_grid[i];
                let magnitude = factor.norm();
                if magnitude < GRID_COLLISION_TOL {
                    return Err(Error::GridCollision { magnitude });
                }
                inverse[j * n_sites + i] = factor.inv();
            }
        }
        let conj_chi: Vec<c64> = chi_grid.iter().map(|z| z.conj()).collect();
        let mut chi_factor = Vec::with_capacity(chis.len());
        let mut rows = Vec::with_capacity(chis.len() * n_sites);
        for chi in chis {
            chi_factor.push(vandermonde(&conj_chi, chi.mask(), n_sites)?);
            let occupied: Vec<usize> = chi.orbitals().collect();
            for j in 0..n_sites {
                let prod = occupied.iter().fold(c64::new(1.0, 0.0), |acc, &i| acc * inverse[j * n_sites + i]);
                rows.push(check_overflow(prod)?);
            }
        }
        Ok(Self { n_sites, m, eta_grid, chi_factor, rows })
    }

    pub fn len(&self) -> usize {
        self.chi_factor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi_factor.is_empty()
    }

    /// `out[(r, c)] = h(etas[r], chis[c])`.
    pub fn fill(&self, etas: &[FermionConfig], mut out: MatMut<'_, c64>) -> Result<()> {
        if out.nrows() != etas.len() || out.ncols() != self.len() {
            return Err(Error::BasisMismatch("h table has the wrong shape".into()));
        }
        let n = self.n_sites;
        let mut worst = 0.0f64;
        for (r, eta) in etas.iter().enumerate() {
            if eta.n() != self.m + 1 || eta.n_sites() != n {
                return Err(Error::MalformedConfig(format!(
                    "h-function needs |eta| = {}, got {}",
                    self.m + 1,
                    eta.n()
                )));
            }
            let eta_factor = vandermonde(&self.eta_grid, eta.mask(), n)?;
            let occupied: Vec<usize> = eta.orbitals().collect();
            for c in 0..self.len() {
                let row = &self.rows[c * n..(c + 1) * n];
                let prod = occupied.iter().fold(eta_factor * self.chi_factor[c], |acc, &j| acc * row[j]);
                worst = worst.max(prod.norm_sqr());
                out[(r, c)] = prod;
            }
        }
        check_overflow(c64::new(worst.sqrt(), 0.0))?;
        Ok(())
    }
}

fn check_same_chain(a: &FermionConfig, b: &FermionConfig) -> Result<()> {
    if a.n_sites() != b.n_sites() {
        return Err(Error::MalformedConfig(format!(
            "configurations on different rings (N = {} and {})",
            a.n_sites(),
            b.n_sites()
        )));
    }
    Ok(())
}

/// The h-function between an `(m+1)`-exciton configuration `eta` and an
/// `m`-exciton configuration `chi`.
pub fn h_func(eta: &FermionConfig, chi: &FermionConfig) -> Result<c64> {
    check_same_chain(eta, chi)?;
    Grids::new(eta.n_sites()).h(eta, chi)
}

/// `hbar(chi, chi2) = sum_eta h(eta, chi) conj(h(eta, chi2))` over all
/// `(n+1)`-exciton configurations `eta`.
pub fn hbar_func(chi: &FermionConfig, chi2: &FermionConfig) -> Result<c64> {
    MatElemCache::new(chi.n_sites()).hbar_uncached(chi, chi2)
}

/// `F(eta, chi) = <chi| sum_j S^-_j |eta>`.
pub fn f_elem(eta: &FermionConfig, chi: &FermionConfig) -> Result<c64> {
    MatElemCache::new(eta.n_sites()).f_elem(eta, chi)
}

/// `Gbar(a, b) = <a| sum_j S^z_j S^z_{j+1} |b>` from the explicit sum over
/// intermediate configurations.
pub fn gbar_elem(a: &FermionConfig, b: &FermionConfig) -> Result<c64> {
    MatElemCache::new(a.n_sites()).gbar_elem(a, b)
}

/// Memoized evaluation of the closed forms for one ring size.
///
/// The `hbar` table is filled lazily behind a read-write lock, so a shared
/// cache can be used from parallel workers. Every stored value is a pure
/// function of its key.
#[derive(Debug)]
pub struct MatElemCache {
    grids: Grids,
    hbar: RwLock<HashMap<(u32, u32), c64>>,
}

impl MatElemCache {
    pub fn new(n_sites: usize) -> Self {
        Self { grids: Grids::new(n_sites), hbar: RwLock::new(HashMap::new()) }
    }

    pub fn n_sites(&self) -> usize {
        self.grids.n_sites
    }

    /// `exp(i K)` of every orbital of the grid used by `n`-exciton states.
    pub fn grid_phases(&self, n: usize) -> &[c64] {
        self.grids.for_count(n)
    }

    pub fn cached_hbar_len(&self) -> usize {
        self.hbar.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn h(&self, eta: &FermionConfig, chi: &FermionConfig) -> Result<c64> {
        check_same_chain(eta, chi)?;
        self.grids.h(eta, chi)
    }

    /// Batched h-function against the configurations `chis`.
    pub fn h_batch(&self, chis: &[FermionConfig]) -> Result<HBatch> {
        HBatch::new(&self.grids, chis)
    }

    fn hbar_uncached(&self, chi: &FermionConfig, chi2: &FermionConfig) -> Result<c64> {
        check_same_chain(chi, chi2)?;
        if chi.n() != chi2.n() {
            return Err(Error::MalformedConfig(format!(
                "hbar needs equal exciton numbers, got {} and {}",
                chi.n(),
                chi2.n()
            )));
        }
        let n_sites = self.n_sites();
        let mut sum = c64::new(0.0, 0.0);
        for occ in combinations(n_sites, chi.n() + 1) {
            let eta = FermionConfig::from_mask(n_sites, occ)?;
            sum += self.grids.h(&eta, chi)? * self.grids.h(&eta, chi2)?.conj();
        }
        Ok(sum)
    }

    pub fn hbar(&self, chi: &FermionConfig, chi2: &FermionConfig) -> Result<c64> {
        let key = (chi.mask(), chi2.mask());
        if let Some(v) = self.hbar.read().ok().and_then(|m| m.get(&key).copied()) {
            return Ok(v);
        }
        let value = self.hbar_uncached(chi, chi2)?;
        if let Ok(mut map) = self.hbar.write() {
            map.insert(key, value);
        }
        Ok(value)
    }

    pub fn f_elem(&self, eta: &FermionConfig, chi: &FermionConfig) -> Result<c64> {
        check_same_chain(eta, chi)?;
        if eta.n() != chi.n() + 1 {
            return Err(Error::MalformedConfig(format!(
                "F needs |eta| = |chi| + 1, got {} and {}",
                eta.n(),
                chi.n()
            )));
        }
        if delta_2pi(momentum_diff(eta, chi)) == 0 {
            return Ok(c64::new(0.0, 0.0));
        }
        Ok(self.grids.h(eta, chi)? * f_prefactor(self.n_sites(), chi.n()))
    }

    pub fn gbar_elem(&self, a: &FermionConfig, b: &FermionConfig) -> Result<c64> {
        check_same_chain(a, b)?;
        if a.n() != b.n() {
            return Err(Error::MalformedConfig(format!(
                "Gbar needs equal exciton numbers, got {} and {}",
                a.n(),
                b.n()
            )));
        }
        let (n_sites, m) = (self.n_sites(), a.n());
        let diagonal = if a == b { m as f64 - 0.75 * n_sites as f64 } else { 0.0 };
        let mut value = c64::new(diagonal, 0.0);
        if delta_2pi(momentum_diff(a, b)) == 0 {
            return Ok(value);
        }
        let mut sum = c64::new(0.0, 0.0);
        for occ in combinations(n_sites, m) {
            let chi = FermionConfig::from_mask(n_sites, occ)?;
            let phase = c64::cis(momentum_diff(a, &chi).radians());
            sum += phase * self.hbar(a, &chi)? * self.hbar(&chi, b)?;
        }
        value += sum * gbar_prefactor(n_sites, m);
        Ok(value)
    }
}

/// `2^m N^{1/2 - m}`.
pub fn f_prefactor(n_sites: usize, m: usize) -> f64 {
    let n = n_sites as f64;
    2f64.powi(m as i32) * n.powf(0.5 - m as f64)
}

/// `(2/N)^{4m} / N`.
pub fn gbar_prefactor(n_sites: usize, m: usize) -> f64 {
    let n = n_sites as f64;
    (2.0 / n).powi(4 * m as i32) / n
}

/// Reduced integer momentum of a bit mask in the grid for its particle
/// number; shared by the block kernels.
pub(crate) fn mask_momentum(grid: &[i64], occ: u32, n_sites: usize) -> i64 {
    reduce((0..n_sites).filter(|&i| occ >> i & 1 == 1).map(|i| grid[i]).sum(), n_sites)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, t: &[usize]) -> FermionConfig {
        FermionConfig::from_tuple(n, t).unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_2pi(MomentumIndex::new(12, 6)), 1);
        assert_eq!(delta_2pi(MomentumIndex::new(2, 6)), 0);
        assert_eq!(delta_2pi(MomentumIndex::new(-24, 6)), 1);
    }

    #[test]
    fn momentum_diff_examples() {
        let vac = FermionConfig::vacuum(4);
        assert!(momentum_diff(&vac, &vac).is_zero());
        assert!(momentum_diff(&cfg(4, &[3]), &vac).is_zero());
        assert_eq!(momentum_diff(&cfg(4, &[1]), &vac).k(), 4);
    }

    #[test]
    fn h_of_single_exciton_is_one() {
        let vac = FermionConfig::vacuum(7);
        for eta in 1..=7 {
            let h = h_func(&cfg(7, &[eta]), &vac).unwrap();
            assert!((h - c64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn batched_h_matches_elementwise() {
        for n in 2..=8 {
            let cache = MatElemCache::new(n);
            for m in 0..n {
                let chis: Vec<FermionConfig> =
                    combinations(n, m).into_iter().map(|o| FermionConfig::from_mask(n, o).unwrap()).collect();
                let etas: Vec<FermionConfig> =
                    combinations(n, m + 1).into_iter().map(|o| FermionConfig::from_mask(n, o).unwrap()).collect();
                let batch = cache.h_batch(&chis).unwrap();
                let mut table = faer::Mat::<c64>::zeros(etas.len(), chis.len());
                batch.fill(&etas, table.as_mut()).unwrap();
                for (r, eta) in etas.iter().enumerate() {
                    for (c, chi) in chis.iter().enumerate() {
                        let h = cache.h(eta, chi).unwrap();
                        assert!((table[(r, c)] - h).norm() <= 1e-12 * h.norm().max(1.0), "N={n} m={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn hbar_vacuum_is_n() {
        let vac = FermionConfig::vacuum(9);
        assert!((hbar_func(&vac, &vac).unwrap() - c64::new(9.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gbar_vacuum_is_quarter_n() {
        for n in 2..=9 {
            let vac = FermionConfig::vacuum(n);
            let g = gbar_elem(&vac, &vac).unwrap();
            assert!((g - c64::new(n as f64 / 4.0, 0.0)).norm() < 1e-12, "N={n}: {g}");
        }
    }

    #[test]
    fn single_exciton_lowering() {
        let vac = FermionConfig::vacuum(6);
        for eta in 1..=6 {
            let c = cfg(6, &[eta]);
            let f = f_elem(&c, &vac).unwrap();
            let expected = if momentum_diff(&c, &vac).is_zero() { 6f64.sqrt() } else { 0.0 };
            assert!((f - c64::new(expected, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn hbar_is_hermitian() {
        let cache = MatElemCache::new(6);
        let configs: Vec<FermionConfig> =
            combinations(6, 2).into_iter().map(|o| FermionConfig::from_mask(6, o).unwrap()).collect();
        for a in &configs {
            for b in &configs {
                let ab = cache.hbar(a, b).unwrap();
                let ba = cache.hbar(b, a).unwrap();
                assert!((ab - ba.conj()).norm() < 1e-12);
            }
        }
        assert_eq!(cache.cached_hbar_len(), configs.len() * configs.len());
    }

    #[test]
    fn h_magnitude_is_reflection_invariant() {
        // Reflection K -> -K maps orbital eta to N + 1 - eta (odd N) or to
        // the mirrored slot of the same grid, which conjugates every factor.
        for n in 2..=8 {
            for m in 0..n {
                let grid_hi = momentum_grid(n, parity(m + 1));
                let grid_lo = momentum_grid(n, parity(m));
                let mirror = |grid: &[i64], occ: u32| -> u32 {
                    (0..n).filter(|&i| occ >> i & 1 == 1).fold(0u32, |acc, i| {
                        let target = reduce(-grid[i], n);
                        acc | 1 << grid.iter().position(|&k| k == target).unwrap()
                    })
                };
                for eta in combinations(n, m + 1) {
                    for chi in combinations(n, m) {
                        let a = h_func(&FermionConfig::from_mask(n, eta).unwrap(), &FermionConfig::from_mask(n, chi).unwrap()).unwrap();
                        let eta_r = FermionConfig::from_mask(n, mirror(&grid_hi, eta)).unwrap();
                        let chi_r = FermionConfig::from_mask(n, mirror(&grid_lo, chi)).unwrap();
                        let b = h_func(&eta_r, &chi_r).unwrap();
                        assert!((a.norm() - b.norm()).abs() <= 1e-10 * (1.0 + a.norm()), "N={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn mismatched_counts_are_rejected() {
        let a = cfg(5, &[1, 2]);
        let b = cfg(5, &[1]);
        assert!(h_func(&b, &a).is_err());
        assert!(gbar_elem(&a, &b).is_err());
        assert!(hbar_func(&a, &b).is_err());
    }

    #[test]
    fn momentum_violating_pair_vanishes() {
        let eta = cfg(6, &[1, 2]);
        let chi = cfg(6, &[1]);
        assert!(!momentum_diff(&eta, &chi).is_zero());
        assert_eq!(f_elem(&eta, &chi).unwrap(), c64::new(0.0, 0.0));
    }
}
