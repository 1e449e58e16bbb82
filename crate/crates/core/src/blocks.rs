//! Dense sector blocks built from the matrix-element kernels.
//!
//! [`lowering_block`] evaluates `F` directly. The interaction block has two
//! equivalent routes: the closed form (h-table, then two matrix products
//! over all intermediate configurations) and a two-body route that applies
//! `sum_j n_j n_{j+1}` to Slater determinants in momentum space. The
//! closed form is exponentially more expensive at half filling, so
//! [`ZzKernel::Auto`] switches on a cost estimate.

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, Par};

use crate::basis::{binomial, combinations, momentum_grid, parity, reduce, FermionConfig};
use crate::error::{Error, Result};
use crate::matrix_elements::{gbar_prefactor, MatElemCache};

/// Route used for the `S^z S^z` block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ZzKernel {
    /// Closed form when cheap enough, two-body otherwise.
    #[default]
    Auto,
    ClosedForm,
    TwoBody,
}

/// Complex multiply-adds above which `Auto` abandons the closed form.
pub const CLOSED_FORM_BUDGET: f64 = 4e9;
/// Rows of intermediate configurations materialized at once.
const ETA_CHUNK: usize = 512;

fn check_sector(configs: &[FermionConfig], n_sites: usize) -> Result<usize> {
    let m = configs.first().map(|c| c.n()).unwrap_or(0);
    for c in configs {
        if c.n() != m || c.n_sites() != n_sites {
            return Err(Error::BasisMismatch("sector block needs a uniform exciton number".into()));
        }
    }
    Ok(m)
}

/// `F` block: rows are `m`-exciton configurations, columns `(m+1)`-exciton
/// configurations, entry `<row| sum_j S^-_j |col>`.
pub fn lowering_block(cache: &MatElemCache, rows: &[FermionConfig], cols: &[FermionConfig]) -> Result<Mat<c64>> {
    let n_sites = cache.n_sites();
    let m = check_sector(rows, n_sites)?;
    let m_hi = check_sector(cols, n_sites)?;
    if !rows.is_empty() && !cols.is_empty() && m_hi != m + 1 {
        return Err(Error::BasisMismatch(format!("lowering block between m = {m} and m = {m_hi}")));
    }
    let mut out = Mat::<c64>::zeros(rows.len(), cols.len());
    for (j, col) in cols.iter().enumerate() {
        for (i, row) in rows.iter().enumerate() {
            out[(i, j)] = cache.f_elem(col, row)?;
        }
    }
    Ok(out)
}

/// Estimated cost of the closed-form route for one sector.
pub fn closed_form_cost(n_sites: usize, m: usize, sector_dim: usize) -> f64 {
    sector_dim as f64 * binomial(n_sites, m + 1) as f64 * binomial(n_sites, m) as f64
}

/// `Gbar` block of `sum_j S^z_j S^z_{j+1}` over one momentum sector.
pub fn gbar_block(cache: &MatElemCache, configs: &[FermionConfig], kernel: ZzKernel) -> Result<Mat<c64>> {
    let n_sites = cache.n_sites();
    let m = check_sector(configs, n_sites)?;
    let shift = m as f64 - 0.25 * n_sites as f64;
    match choose(kernel, n_sites, m, configs.len()) {
        ZzKernel::TwoBody => {
            let mut v = pair_density_two_body(n_sites, configs)?;
            for i in 0..configs.len() {
                v[(i, i)] -= shift;
            }
            Ok(v)
        }
        _ => gbar_closed_form(cache, configs),
    }
}

/// Block of the nearest-neighbour density product `V = sum_j n_j n_{j+1}`,
/// related to `Gbar` by `V = Gbar + m - N/4`.
pub fn pair_density_block(cache: &MatElemCache, configs: &[FermionConfig], kernel: ZzKernel) -> Result<Mat<c64>> {
    let n_sites = cache.n_sites();
    let m = check_sector(configs, n_sites)?;
    match choose(kernel, n_sites, m, configs.len()) {
        ZzKernel::TwoBody => pair_density_two_body(n_sites, configs),
        _ => {
            let mut g = gbar_closed_form(cache, configs)?;
            let shift = m as f64 - 0.25 * n_sites as f64;
            for i in 0..configs.len() {
                g[(i, i)] += shift;
            }
            Ok(g)
        }
    }
}

fn choose(kernel: ZzKernel, n_sites: usize, m: usize, dim: usize) -> ZzKernel {
    match kernel {
        ZzKernel::Auto if closed_form_cost(n_sites, m, dim) <= CLOSED_FORM_BUDGET => ZzKernel::ClosedForm,
        ZzKernel::Auto => ZzKernel::TwoBody,
        k => k,
    }
}

/// Closed form over a single momentum sector:
/// `X[a, chi] = hbar(a, chi)` accumulated as `H_sector^T conj(H_all)` over
/// chunks of intermediate configurations, then
/// `Gbar = pref (X o Phase) X^dagger` with `Phase[chi] = exp(i (K_a - K_chi))`.
fn gbar_closed_form(cache: &MatElemCache, configs: &[FermionConfig]) -> Result<Mat<c64>> {
    let n_sites = cache.n_sites();
    let z = configs.len();
    let mut out = Mat::<c64>::zeros(z, z);
    if z == 0 {
        return Ok(out);
    }
    let m = configs[0].n();
    let sector_k = {
        let grid = momentum_grid(n_sites, parity(m));
        let k = crate::matrix_elements::mask_momentum(&grid, configs[0].mask(), n_sites);
        for c in configs {
            if crate::matrix_elements::mask_momentum(&grid, c.mask(), n_sites) != k {
                return Err(Error::BasisMismatch("closed-form block spans several momentum sectors".into()));
            }
        }
        k
    };
    let chis: Vec<FermionConfig> =
        combinations(n_sites, m).into_iter().map(|o| FermionConfig::from_mask(n_sites, o)).collect::<Result<_>>()?;
    let etas: Vec<FermionConfig> = combinations(n_sites, m + 1)
        .into_iter()
        .map(|o| FermionConfig::from_mask(n_sites, o))
        .collect::<Result<_>>()?;
    let position: std::collections::HashMap<u32, usize> =
        chis.iter().enumerate().map(|(i, c)| (c.mask(), i)).collect();
    let sector_cols: Vec<usize> = configs.iter().map(|c| position[&c.mask()]).collect();

    let batch = cache.h_batch(&chis)?;
    let mut x = Mat::<c64>::zeros(z, chis.len());
    for chunk in etas.chunks(ETA_CHUNK) {
        let mut table = Mat::<c64>::zeros(chunk.len(), chis.len());
        batch.fill(chunk, table.as_mut())?;
        let sector_rows = Mat::<c64>::from_fn(chunk.len(), z, |r, a| table[(r, sector_cols[a])]);
        matmul(x.as_mut(), Accum::Add, sector_rows.transpose(), table.conjugate(), c64::new(1.0, 0.0), Par::Seq);
    }

    let grid = momentum_grid(n_sites, parity(m));
    let phase: Vec<c64> = chis
        .iter()
        .map(|chi| {
            let k = sector_k - crate::matrix_elements::mask_momentum(&grid, chi.mask(), n_sites);
            c64::cis(k as f64 * std::f64::consts::PI / n_sites as f64)
        })
        .collect();
    let weighted = Mat::<c64>::from_fn(z, chis.len(), |a, c| x[(a, c)] * phase[c]);
    let pref = gbar_prefactor(n_sites, m);
    matmul(out.as_mut(), Accum::Replace, weighted.as_ref(), x.adjoint(), c64::new(pref, 0.0), Par::Seq);
    let diag = m as f64 - 0.75 * n_sites as f64;
    for i in 0..z {
        out[(i, i)] += diag;
    }
    symmetrize(&mut out);
    Ok(out)
}

/// Replace the lower triangle by the conjugate of the upper one and make
/// the diagonal real.
pub fn symmetrize(mat: &mut Mat<c64>) {
    for j in 0..mat.ncols() {
        mat[(j, j)] = c64::new(mat[(j, j)].re, 0.0);
        for i in j + 1..mat.nrows() {
            mat[(i, j)] = mat[(j, i)].conj();
        }
    }
}

/// `V = (1/N) sum exp(i(k3 - k2)) c+_{k1} c+_{k2} c_{k3} c_{k4}` with
/// `k1 + k2 = k3 + k4`, applied column by column. Signs follow the number of
/// occupied orbitals below each index (orbitals ordered as the grid).
fn pair_density_two_body(n_sites: usize, configs: &[FermionConfig]) -> Result<Mat<c64>> {
    let z = configs.len();
    let mut out = Mat::<c64>::zeros(z, z);
    if z == 0 || configs[0].n() < 2 {
        return Ok(out);
    }
    if n_sites < 2 {
        return Err(Error::invalid("N", "pair density needs at least two sites"));
    }
    let m = configs[0].n();
    let grid = momentum_grid(n_sites, parity(m));
    let two_n = 2 * n_sites as i64;
    let mut slot = vec![usize::MAX; 2 * n_sites];
    for (i, &k) in grid.iter().enumerate() {
        slot[k.rem_euclid(two_n) as usize] = i;
    }
    let index: std::collections::HashMap<u32, usize> = configs.iter().enumerate().map(|(i, c)| (c.mask(), i)).collect();
    let below = |occ: u32, i: usize| (occ & ((1u32 << i) - 1)).count_ones();
    let sign = |count: u32| if count.is_multiple_of(2) { 1.0 } else { -1.0 };
    let unit = std::f64::consts::PI / n_sites as f64;
    let inv_n = 1.0 / n_sites as f64;

    for (col, cfg) in configs.iter().enumerate() {
        let occ = cfg.mask();
        let occupied: Vec<usize> = cfg.orbitals().collect();
        for &i4 in &occupied {
            let s4 = sign(below(occ, i4));
            let occ4 = occ & !(1 << i4);
            for &i3 in &occupied {
                if i3 == i4 {
                    continue;
                }
                let s3 = sign(below(occ4, i3));
                let occ3 = occ4 & !(1 << i3);
                let total = grid[i3] + grid[i4];
                for i2 in (0..n_sites).filter(|&i| occ3 >> i & 1 == 0) {
                    let i1 = slot[(total - grid[i2]).rem_euclid(two_n) as usize];
                    if i1 == usize::MAX || i1 == i2 || occ3 >> i1 & 1 == 1 {
                        continue;
                    }
                    let s2 = sign(below(occ3, i2));
                    let occ2 = occ3 | 1 << i2;
                    let s1 = sign(below(occ2, i1));
                    let target = occ2 | 1 << i1;
                    let Some(&row) = index.get(&target) else {
                        return Err(Error::BasisMismatch("two-body image left the momentum sector".into()));
                    };
                    let phase = c64::cis(reduce(grid[i3] - grid[i2], n_sites) as f64 * unit);
                    out[(row, col)] += phase * (s1 * s2 * s3 * s4 * inv_n);
                }
            }
        }
    }
    symmetrize(&mut out);
    Ok(out)
}
