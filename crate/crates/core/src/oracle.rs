//! Brute-force reference: the light-matter Hamiltonian in the full product
//! space of `2^N` site occupations and a photon ladder, built from
//! hardcore-boson operators on bit masks. Nothing here uses the closed-form
//! matrix elements; the free-fermion states enter only through explicit
//! Slater determinants in [`project_subspace`].

use faer::{c64, Mat};

use crate::basis::{FermionConfig, SubspaceBasis};
use crate::dynamics::{power_density, DensityScale, TimeGrid, Trajectory, NORM_TOL};
use crate::error::{Error, Result};
use crate::linalg::{eigh, norm};
use crate::params::{AggregateParams, CavityParams};

/// Largest full-space dimension the oracle will build.
pub const MAX_FULL_DIM: usize = 1 << 22;
/// Largest excitation block the oracle will diagonalize densely.
pub const MAX_DENSE_DIM: usize = 4096;

/// Sparse Hermitian operator on the product space, row index
/// `mask + 2^N * photons`.
#[derive(Clone, Debug)]
pub struct FullSpaceOperator {
    pub n_sites: usize,
    pub photon_cutoff: usize,
    /// `rows[i]` holds `(column, value)` pairs of `H`.
    rows: Vec<Vec<(usize, c64)>>,
    /// Diagonal of `H_m` (the molecular part is hopping plus diagonal).
    molecular_rows: Vec<Vec<(usize, c64)>>,
}

impl FullSpaceOperator {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn index(&self, mask: u32, photons: usize) -> usize {
        mask as usize + (photons << self.n_sites)
    }

    /// `(mask, photons)` of a row.
    pub fn state(&self, row: usize) -> (u32, usize) {
        ((row & ((1 << self.n_sites) - 1)) as u32, row >> self.n_sites)
    }

    /// Total excitation number of a row.
    pub fn excitations(&self, row: usize) -> usize {
        let (mask, photons) = self.state(row);
        mask.count_ones() as usize + photons
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, c64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
    }

    /// Largest `|[H, N_exc]_{ij}|`.
    pub fn number_commutator_norm(&self) -> f64 {
        self.entries()
            .map(|(i, j, v)| v.norm() * (self.excitations(i) as f64 - self.excitations(j) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let dense = self.dense_rows(&(0..self.dim()).collect::<Vec<_>>(), false);
        crate::linalg::hermiticity_defect(dense.as_ref())
    }

    fn dense_rows(&self, rows: &[usize], molecular: bool) -> Mat<c64> {
        let source = if molecular { &self.molecular_rows } else { &self.rows };
        let mut position = vec![usize::MAX; self.dim()];
        for (k, &r) in rows.iter().enumerate() {
            position[r] = k;
        }
        let mut out = Mat::<c64>::zeros(rows.len(), rows.len());
        for (k, &r) in rows.iter().enumerate() {
            for &(c, v) in &source[r] {
                if position[c] != usize::MAX {
                    out[(k, position[c])] += v;
                }
            }
        }
        out
    }

    /// Rows with exactly `n_total` excitations, in ascending row order.
    pub fn excitation_rows(&self, n_total: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&r| self.excitations(r) == n_total).collect()
    }

    /// Dense restriction of `H` to the `n_total`-excitation block.
    pub fn excitation_block(&self, n_total: usize) -> Result<Mat<c64>> {
        let rows = self.excitation_rows(n_total);
        if rows.len() > MAX_DENSE_DIM {
            return Err(Error::TooLarge { dim: rows.len(), limit: MAX_DENSE_DIM, context: "oracle dense block" });
        }
        Ok(self.dense_rows(&rows, false))
    }

    fn apply(&self, rows: &[Vec<(usize, c64)>], v: &[c64]) -> Vec<c64> {
        rows.iter().map(|r| r.iter().map(|&(j, x)| x * v[j]).sum()).collect()
    }

    pub fn apply_h(&self, v: &[c64]) -> Vec<c64> {
        self.apply(&self.rows, v)
    }

    pub fn apply_molecular(&self, v: &[c64]) -> Vec<c64> {
        self.apply(&self.molecular_rows, v)
    }
}

/// Light-matter Hamiltonian on `2^N x (photon_cutoff + 1)` states:
/// `H_m + omega_c c+ c + g sum_j (S+_j c + S-_j c+)` with
/// `H_m = sum_j [omega n_j + J (S+_j S-_{j+1} + h.c.) + A n_j n_{j+1}]`.
pub fn brute_force_h(
    params: &AggregateParams,
    cavity: &CavityParams,
    g: f64,
    photon_cutoff: usize,
) -> Result<FullSpaceOperator> {
    let n = params.n_sites;
    if photon_cutoff < cavity.n_photons {
        return Err(Error::invalid("photon_cutoff", format!("{photon_cutoff} is below n_ph = {}", cavity.n_photons)));
    }
    let dim = (photon_cutoff + 1).checked_shl(n as u32).filter(|&d| d <= MAX_FULL_DIM && n < 32);
    let Some(dim) = dim else {
        return Err(Error::TooLarge { dim: usize::MAX, limit: MAX_FULL_DIM, context: "oracle full space" });
    };
    let mut rows: Vec<Vec<(usize, c64)>> = vec![Vec::new(); dim];
    let mut molecular_rows: Vec<Vec<(usize, c64)>> = vec![Vec::new(); dim];
    let idx = |mask: u32, p: usize| mask as usize + (p << n);
    let real = |x: f64| c64::new(x, 0.0);
    for p in 0..=photon_cutoff {
        for mask in 0..(1u32 << n) {
            let col = idx(mask, p);
            let occ = |j: usize| (mask >> j & 1) as f64;
            let mut diag = 0.0;
            let mut hop: Vec<(usize, f64)> = Vec::new();
            for j in 0..n {
                let next = (j + 1) % n;
                diag += params.omega * occ(j) + params.interaction * occ(j) * occ(next);
                // J S+_j S-_{next} + J S+_{next} S-_j.
                for (to, from) in [(j, next), (next, j)] {
                    if to == from {
                        diag += params.hopping * occ(j);
                    } else if mask >> from & 1 == 1 && mask >> to & 1 == 0 {
                        hop.push((idx(mask ^ (1 << from) ^ (1 << to), p), params.hopping));
                    }
                }
            }
            // Row-major storage of H: entries (row, col) pushed to rows[row].
            rows[col].push((col, real(diag + cavity.omega_c * p as f64)));
            molecular_rows[col].push((col, real(diag)));
            for &(row, v) in &hop {
                rows[row].push((col, real(v)));
                molecular_rows[row].push((col, real(v)));
            }
            for j in 0..n {
                if mask >> j & 1 == 0 && p > 0 {
                    // S+_j c: absorb a photon.
                    rows[idx(mask | 1 << j, p - 1)].push((col, real(g * (p as f64).sqrt())));
                }
                if mask >> j & 1 == 1 && p < photon_cutoff {
                    // S-_j c+: emit a photon.
                    rows[idx(mask & !(1 << j), p + 1)].push((col, real(g * (p as f64 + 1.0).sqrt())));
                }
            }
        }
    }
    Ok(FullSpaceOperator { n_sites: n, photon_cutoff, rows, molecular_rows })
}

/// Determinant by Gaussian elimination with partial pivoting.
fn determinant(mut a: Vec<Vec<c64>>) -> c64 {
    let n = a.len();
    let mut det = c64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm())).unwrap_or(col);
        if a[pivot][col].norm() == 0.0 {
            return c64::new(0.0, 0.0);
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                let sub = factor * a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    det
}

/// The free-fermion eigenstate `cfg` as site amplitudes:
/// `psi(x_1 < ... < x_m) = N^{-m/2} det[exp(i K_a x_b)]`, indexed by site
/// mask.
pub fn slater_state(cfg: &FermionConfig) -> Vec<(u32, c64)> {
    let n = cfg.n_sites();
    let m = cfg.n();
    let unit = std::f64::consts::PI / n as f64;
    let momenta: Vec<f64> = cfg.momenta().iter().map(|&k| k as f64 * unit).collect();
    let norm = (n as f64).powf(-(m as f64) / 2.0);
    crate::basis::combinations(n, m)
        .into_iter()
        .map(|mask| {
            let sites: Vec<f64> = (0..n).filter(|&x| mask >> x & 1 == 1).map(|x| x as f64).collect();
            let mat = momenta.iter().map(|&k| sites.iter().map(|&x| c64::cis(k * x)).collect()).collect();
            (mask, determinant(mat) * norm)
        })
        .collect()
}

/// Columns of the subspace basis embedded in the full space.
pub fn embed_basis(full: &FullSpaceOperator, basis: &SubspaceBasis) -> Result<Mat<c64>> {
    if basis.n_sites() != full.n_sites {
        return Err(Error::BasisMismatch("oracle and basis disagree on N".into()));
    }
    let mut out = Mat::<c64>::zeros(full.dim(), basis.dim());
    for (col, entry) in basis.entries().iter().enumerate() {
        if entry.photons > full.photon_cutoff {
            return Err(Error::BasisMismatch(format!("{} photons exceed the oracle cutoff", entry.photons)));
        }
        for (mask, amp) in slater_state(&entry.config) {
            out[(full.index(mask, entry.photons), col)] = amp;
        }
    }
    Ok(out)
}

/// `<b_i| H |b_j>` over the subspace basis vectors, or of `H_m` with
/// `molecular = true`.
pub fn project_subspace(full: &FullSpaceOperator, basis: &SubspaceBasis, molecular: bool) -> Result<Mat<c64>> {
    let b = embed_basis(full, basis)?;
    let dim = basis.dim();
    let mut out = Mat::<c64>::zeros(dim, dim);
    for j in 0..dim {
        let col: Vec<c64> = (0..full.dim()).map(|r| b[(r, j)]).collect();
        let hcol = if molecular { full.apply_molecular(&col) } else { full.apply_h(&col) };
        for i in 0..dim {
            let mut acc = c64::new(0.0, 0.0);
            for r in 0..full.dim() {
                acc += b[(r, i)].conj() * hcol[r];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Exact evolution of `psi0` (full-space amplitudes) by dense
/// diagonalization of the excitation block it lives in.
pub fn brute_force_evolve(
    full: &FullSpaceOperator,
    psi0: &[c64],
    grid: &TimeGrid,
    scale: DensityScale,
) -> Result<Trajectory> {
    if psi0.len() != full.dim() {
        return Err(Error::BasisMismatch("state and oracle dimensions differ".into()));
    }
    let deviation = (norm(psi0) - 1.0).abs();
    if deviation > NORM_TOL {
        return Err(Error::NotNormalized { deviation });
    }
    let support: Vec<usize> = (0..full.dim()).filter(|&r| psi0[r].norm() > 0.0).collect();
    let n_total = support.first().map(|&r| full.excitations(r)).unwrap_or(0);
    if support.iter().any(|&r| full.excitations(r) != n_total) {
        return Err(Error::BasisMismatch("initial state mixes excitation numbers".into()));
    }
    let rows = full.excitation_rows(n_total);
    if rows.len() > MAX_DENSE_DIM {
        return Err(Error::TooLarge { dim: rows.len(), limit: MAX_DENSE_DIM, context: "oracle dense block" });
    }
    let h = full.dense_rows(&rows, false);
    let hm = full.dense_rows(&rows, true);
    let local: Vec<c64> = rows.iter().map(|&r| psi0[r]).collect();
    let evd = eigh(h.as_ref())?;
    let d = rows.len();
    let coeffs: Vec<c64> = (0..d).map(|a| (0..d).map(|i| evd.vectors[(i, a)].conj() * local[i]).sum()).collect();
    let times = grid.points();
    let mut e_density = Vec::with_capacity(times.len());
    for &wt in &times {
        let t = wt / scale.omega;
        let phased: Vec<c64> = (0..d).map(|a| c64::cis(-evd.values[a] * t) * coeffs[a]).collect();
        let psi = crate::linalg::mat_vec(evd.vectors.as_ref(), &phased);
        let e = crate::linalg::sandwich(hm.as_ref(), &psi, &psi).re;
        e_density.push(e / (scale.n_sites as f64 * scale.omega));
    }
    let p_density = power_density(&times, &e_density);
    Ok(Trajectory { times, e_density, p_density })
}

/// `|n_ph> (x) |vac>` in the full space.
pub fn full_initial_state(full: &FullSpaceOperator, n_ph: usize) -> Vec<c64> {
    let mut psi = vec![c64::new(0.0, 0.0); full.dim()];
    psi[full.index(0, n_ph)] = c64::new(1.0, 0.0);
    psi
}
