//! Thin wrappers over the dense Hermitian routines of `faer`.

use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// (columns).
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Mat<c64>,
}

pub fn eigh(mat: MatRef<'_, c64>) -> Result<EigenDecomposition> {
    let evd = mat.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values = (0..mat.nrows()).map(|i| evd.S()[i].re).collect();
    Ok(EigenDecomposition { values, vectors: evd.U().to_owned() })
}

pub fn eigvalsh(mat: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if mat.nrows() == 0 {
        return Ok(Vec::new());
    }
    mat.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// True iff `mat + shift I` admits a Cholesky factorization.
pub fn is_positive_definite(mat: MatRef<'_, c64>, shift: f64) -> bool {
    if mat.nrows() == 0 {
        return true;
    }
    let shifted = Mat::<c64>::from_fn(mat.nrows(), mat.ncols(), |i, j| {
        if i == j {
            mat[(i, j)] + shift
        } else {
            mat[(i, j)]
        }
    });
    shifted.llt(Side::Lower).is_ok()
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(mat: MatRef<'_, c64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..mat.ncols() {
        for i in 0..mat.nrows() {
            worst = worst.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<u| A |v>`.
pub fn sandwich(a: MatRef<'_, c64>, u: &[c64], v: &[c64]) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        if v[j] == c64::new(0.0, 0.0) {
            continue;
        }
        let mut col = c64::new(0.0, 0.0);
        for i in 0..a.nrows() {
            col += u[i].conj() * a[(i, j)];
        }
        acc += col * v[j];
    }
    acc
}

pub fn mat_vec(a: MatRef<'_, c64>, v: &[c64]) -> Vec<c64> {
    let mut out = vec![c64::new(0.0, 0.0); a.nrows()];
    for j in 0..a.ncols() {
        let vj = v[j];
        if vj == c64::new(0.0, 0.0) {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += a[(i, j)] * vj;
        }
    }
    out
}
