//! Dense helpers shared by the threshold and propagator modules.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::freeops::Block;

pub type CMat = Mat<Complex64>;

/// diag(blocks) · m, where m has 2N rows.
pub fn block_diag_left(blocks: &[Block], m: MatRef<'_, Complex64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| {
        let k = r / 2;
        let a = r % 2;
        let b = &blocks[k].0[a];
        b[0] * m[(2 * k, c)] + b[1] * m[(2 * k + 1, c)]
    })
}

/// m · diag(blocks), where m has 2N columns.
pub fn block_diag_right(m: MatRef<'_, Complex64>, blocks: &[Block]) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| {
        let k = c / 2;
        let b = c % 2;
        let blk = &blocks[k].0;
        m[(r, 2 * k)] * blk[0][b] + m[(r, 2 * k + 1)] * blk[1][b]
    })
}

/// Sum of absolute values of the largest column (matrix 1-norm).
pub fn norm_1(m: MatRef<'_, Complex64>) -> f64 {
    (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn max_abs(m: MatRef<'_, Complex64>) -> f64 {
    let mut w: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            w = w.max(m[(i, j)].norm());
        }
    }
    w
}

pub fn frobenius(m: MatRef<'_, Complex64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// Largest singular value.
pub fn spectral_norm(m: MatRef<'_, Complex64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().map(|s| s[0]).unwrap_or(f64::NAN)
}

pub fn hermitian_part(m: MatRef<'_, Complex64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn hermitian_eigen(m: MatRef<'_, Complex64>) -> Result<(Vec<f64>, CMat)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Singular(format!("Hermitian eigensolver failed: {e:?}")))?;
    let vals = (0..m.nrows()).map(|k| evd.S()[k].re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn hermitian_eigenvalues(m: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    let v = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Singular(format!("Hermitian eigensolver failed: {e:?}")))?;
    Ok(v)
}

/// Inverse of a small matrix, refusing when σ_min < rel_tol·σ_max.
pub fn checked_inverse(m: MatRef<'_, Complex64>, rel_tol: f64, what: &str) -> Result<CMat> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let sv = m.singular_values().map_err(|e| Error::Singular(format!("{what}: SVD failed: {e:?}")))?;
    let (smax, smin) = (sv[0], sv[n - 1]);
    if !(smin > rel_tol * smax) {
        return Err(Error::Singular(format!("{what}: sigma_min/sigma_max = {:e}", smin / smax)));
    }
    Ok(m.partial_piv_lu().inverse())
}

/// Dense LU inverse with a 1-norm condition estimate.
pub fn inverse_with_condition(m: MatRef<'_, Complex64>) -> (CMat, f64) {
    let inv = m.partial_piv_lu().inverse();
    let cond = norm_1(m) * norm_1(inv.as_ref());
    (inv, cond)
}

/// Solve m x = rhs.
pub fn solve(m: MatRef<'_, Complex64>, rhs: MatRef<'_, Complex64>) -> CMat {
    m.partial_piv_lu().solve(rhs)
}

pub fn identity_residual(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> f64 {
    let p = a * b;
    let n = p.nrows();
    let mut w: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            w = w.max((p[(i, j)] - target).norm());
        }
    }
    w
}
