//! Free-fermion eigenbasis of the noninteracting ring and the fixed
//! excitation-number subspaces built from it.
//!
//! After the Jordan-Wigner transformation, an `n`-exciton state lives on a
//! momentum grid that depends on the parity of `n`. Momenta are kept as exact
//! integers `k` with `K = k pi / N`, reduced into `(-N, N]`.
//!
//! Orbital indices are 1-based in the public tuple API (`1 <= eta <= N`) and
//! 0-based bit positions inside [`FermionConfig`].

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{AggregateParams, MAX_SITES};

/// A crystal momentum `K = k pi / N`, canonically reduced into `(-N, N]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MomentumIndex {
    k: i64,
    n_sites: usize,
}

impl MomentumIndex {
    pub fn new(k: i64, n_sites: usize) -> Self {
        assert!(n_sites > 0, "momentum grid needs N >= 1");
        Self { k: reduce(k, n_sites), n_sites }
    }

    pub fn zero(n_sites: usize) -> Self {
        Self::new(0, n_sites)
    }

    /// Integer index in units of `pi / N`.
    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn radians(&self) -> f64 {
        self.k as f64 * PI / self.n_sites as f64
    }

    /// True iff the momentum is a multiple of `2 pi`.
    pub fn is_zero(&self) -> bool {
        self.k == 0
    }
}

impl std::ops::Add for MomentumIndex {
    type Output = MomentumIndex;
    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.n_sites, rhs.n_sites);
        MomentumIndex::new(self.k + rhs.k, self.n_sites)
    }
}

impl std::ops::Sub for MomentumIndex {
    type Output = MomentumIndex;
    fn sub(self, rhs: Self) -> Self {
        debug_assert_eq!(self.n_sites, rhs.n_sites);
        MomentumIndex::new(self.k - rhs.k, self.n_sites)
    }
}

/// Reduce `k` modulo `2N` into `(-N, N]`.
pub fn reduce(k: i64, n_sites: usize) -> i64 {
    let n = n_sites as i64;
    let r = k.rem_euclid(2 * n);
    if r > n {
        r - 2 * n
    } else {
        r
    }
}

/// Parity label of an `n`-exciton state: `+1` for even `n`, `-1` for odd.
pub fn parity(n: usize) -> i32 {
    if n.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Unreduced grid index of orbital `eta` (1-based) for parity `sigma`.
fn raw_grid_index(n_sites: usize, sigma: i32, eta: usize) -> i64 {
    let (n, eta, s) = (n_sites as i64, eta as i64, sigma as i64);
    if n_sites.is_multiple_of(2) {
        -n + 2 * eta + (s - 3) / 2
    } else {
        -n + 2 * eta - (s + 3) / 2
    }
}

/// Momentum of orbital `eta` in the grid used by `n`-exciton states.
pub fn wave_number(n_sites: usize, n: usize, eta: usize) -> Result<MomentumIndex> {
    if eta == 0 || eta > n_sites {
        return Err(Error::OrbitalOutOfRange { eta, n_sites });
    }
    Ok(MomentumIndex::new(raw_grid_index(n_sites, parity(n), eta), n_sites))
}

/// The full grid for parity `sigma`, indexed by 0-based orbital position.
pub fn momentum_grid(n_sites: usize, sigma: i32) -> Vec<i64> {
    (1..=n_sites).map(|eta| reduce(raw_grid_index(n_sites, sigma, eta), n_sites)).collect()
}

/// Occupied orbitals of an `n`-exciton free-fermion eigenstate, stored as a
/// bit mask over 0-based orbital positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FermionConfig {
    occ: u32,
    n_sites: u8,
}

impl FermionConfig {
    pub fn vacuum(n_sites: usize) -> Self {
        Self::from_mask(n_sites, 0).expect("vacuum is always valid")
    }

    pub fn from_mask(n_sites: usize, occ: u32) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::MalformedConfig(format!("N = {n_sites} outside 1..={MAX_SITES}")));
        }
        if occ >> n_sites != 0 {
            return Err(Error::MalformedConfig(format!("mask {occ:#b} exceeds {n_sites} orbitals")));
        }
        Ok(Self { occ, n_sites: n_sites as u8 })
    }

    /// Build from a strictly increasing tuple of 1-based orbital indices.
    pub fn from_tuple(n_sites: usize, tuple: &[usize]) -> Result<Self> {
        let mut occ = 0u32;
        let mut prev = 0;
        for &eta in tuple {
            if eta == 0 || eta > n_sites {
                return Err(Error::OrbitalOutOfRange { eta, n_sites });
            }
            if eta <= prev {
                return Err(Error::MalformedConfig(format!("tuple {tuple:?} is not strictly increasing")));
            }
            prev = eta;
            occ |= 1 << (eta - 1);
        }
        Self::from_mask(n_sites, occ)
    }

    pub fn mask(&self) -> u32 {
        self.occ
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites as usize
    }

    /// Number of excitons.
    pub fn n(&self) -> usize {
        self.occ.count_ones() as usize
    }

    pub fn sigma(&self) -> i32 {
        parity(self.n())
    }

    /// 0-based occupied orbital positions in ascending order.
    pub fn orbitals(&self) -> impl Iterator<Item = usize> + '_ {
        let occ = self.occ;
        (0..self.n_sites()).filter(move |&i| occ >> i & 1 == 1)
    }

    /// The ordered 1-based tuple `eta_1 < ... < eta_n`.
    pub fn tuple(&self) -> Vec<usize> {
        self.orbitals().map(|i| i + 1).collect()
    }

    /// Integer momenta of the occupied orbitals, in ascending orbital order.
    pub fn momenta(&self) -> Vec<i64> {
        let grid = momentum_grid(self.n_sites(), self.sigma());
        self.orbitals().map(|i| grid[i]).collect()
    }
}

/// Noninteracting energy `n omega + 2J sum cos K` of a configuration.
///
/// The constant is `n omega` rather than a single `omega`: it is the only
/// choice under which the vacuum has zero energy and the brute-force
/// hardcore-boson spectrum is reproduced.
pub fn free_energy(params: &AggregateParams, cfg: &FermionConfig) -> f64 {
    let n_sites = cfg.n_sites() as f64;
    let band: f64 = cfg.momenta().iter().map(|&k| (k as f64 * PI / n_sites).cos()).sum();
    cfg.n() as f64 * params.omega + 2.0 * params.hopping * band
}

pub fn total_momentum(cfg: &FermionConfig) -> MomentumIndex {
    MomentumIndex::new(cfg.momenta().iter().sum(), cfg.n_sites())
}

/// Iterator over all `m`-subsets of `0..n` as bit masks, in lexicographic
/// order of the ascending index tuples.
pub fn combinations(n: usize, m: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(binomial(n, m));
    if m > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        out.push(idx.iter().fold(0u32, |acc, &i| acc | 1 << i));
        // Advance the rightmost index that still has room.
        let mut pos = m;
        while pos > 0 && idx[pos - 1] == n - m + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return out;
        }
        idx[pos - 1] += 1;
        for q in pos..m {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `m`-exciton configurations, optionally restricted to the total
/// momentum `momentum` (integer units, any representative), in tuple order.
pub fn sector_configs(n_sites: usize, m: usize, momentum: Option<i64>) -> Vec<FermionConfig> {
    let grid = momentum_grid(n_sites, parity(m));
    let target = momentum.map(|k| reduce(k, n_sites));
    combinations(n_sites, m)
        .into_iter()
        .filter(|&occ| {
            target.is_none_or(|t| {
                let sum: i64 = (0..n_sites).filter(|&i| occ >> i & 1 == 1).map(|i| grid[i]).sum();
                reduce(sum, n_sites) == t
            })
        })
        .map(|occ| FermionConfig { occ, n_sites: n_sites as u8 })
        .collect()
}

/// All distinct total momenta (reduced) reachable by `m` excitons.
pub fn sector_momenta(n_sites: usize, m: usize) -> Vec<i64> {
    let mut ks: Vec<i64> = sector_configs(n_sites, m, None).iter().map(|c| total_momentum(c).k()).collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// One basis vector `|Ntot - m> (x) |config>` of an excitation subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisEntry {
    pub photons: usize,
    pub config: FermionConfig,
}

/// A contiguous run of basis entries sharing the exciton number `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SectorRange {
    pub m: usize,
    pub start: usize,
    pub len: usize,
}

/// Ordered basis of the subspace with fixed total excitation number.
///
/// Entries are sorted by exciton number, then by the lexicographic order of
/// the occupied-orbital tuples, so each exciton number occupies a contiguous
/// block.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    n_sites: usize,
    n_total: usize,
    zero_momentum: bool,
    entries: Vec<BasisEntry>,
    sectors: Vec<SectorRange>,
    index: HashMap<(usize, u32), usize>,
}

impl SubspaceBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn zero_momentum(&self) -> bool {
        self.zero_momentum
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    pub fn sectors(&self) -> &[SectorRange] {
        &self.sectors
    }

    pub fn sector(&self, m: usize) -> Option<&SectorRange> {
        self.sectors.iter().find(|s| s.m == m)
    }

    /// Configurations of the exciton-number block `m`.
    pub fn configs(&self, m: usize) -> Vec<FermionConfig> {
        self.sector(m)
            .map(|s| self.entries[s.start..s.start + s.len].iter().map(|e| e.config).collect())
            .unwrap_or_default()
    }

    /// Row of the entry with the given configuration, if present.
    pub fn position(&self, config: &FermionConfig) -> Option<usize> {
        self.index.get(&(config.n(), config.mask())).copied()
    }

    pub fn max_excitons(&self) -> usize {
        self.n_total.min(self.n_sites)
    }
}

/// Basis of the `Ntot`-excitation subspace of an `N`-site ring, optionally
/// filtered to zero total momentum.
pub fn build_subspace(n_sites: usize, n_total: usize, zero_momentum: bool) -> Result<SubspaceBasis> {
    if n_sites == 0 || n_sites > MAX_SITES {
        return Err(Error::invalid("N", format!("must lie in 1..={MAX_SITES}, got {n_sites}")));
    }
    let mut entries = Vec::new();
    let mut sectors = Vec::new();
    for m in 0..=n_total.min(n_sites) {
        let start = entries.len();
        let configs = sector_configs(n_sites, m, zero_momentum.then_some(0));
        entries.extend(configs.into_iter().map(|config| BasisEntry { photons: n_total - m, config }));
        sectors.push(SectorRange { m, start, len: entries.len() - start });
    }
    let index = entries.iter().enumerate().map(|(i, e)| ((e.config.n(), e.config.mask()), i)).collect();
    Ok(SubspaceBasis { n_sites, n_total, zero_momentum, entries, sectors, index })
}
