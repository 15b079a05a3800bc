use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// M⁻¹ through the projection S: with B = S − S(M+S)⁻¹S,
/// M⁻¹ = (M+S)⁻¹ + (M+S)⁻¹ S B⁺ S (M+S)⁻¹, B⁺ the inverse of B on range(S).
pub fn jn_invert(m: &CMat, s: &CMat) -> Result<CMat> {
    let n = m.nrows();
    if m.ncols() != n || s.nrows() != n || s.ncols() != n {
        return Err(Error::Validation("jn_invert needs square matrices of equal size".into()));
    }
    let ms = m + s;
    let inv1 = linalg::checked_inverse(ms.as_ref(), 1e-13, "M + S")?;
    let (vals, vecs) = linalg::hermitian_eigen(linalg::hermitian_part(s.as_ref()).as_ref())?;
    let idx: Vec<usize> = (0..n).filter(|&k| vals[k] > 0.5).collect();
    if idx.is_empty() {
        return Ok(inv1);
    }
    let e = Mat::from_fn(n, idx.len(), |i, c| vecs[(i, idx[c])]);
    let b = s - s * &inv1 * s;
    let small = e.adjoint() * &b * &e;
    let rel = 1e-10 / small.nrows() as f64;
    let sv = small.singular_values().map_err(|err| Error::Singular(format!("{err:?}")))?;
    let smax = sv[0].max(1.0);
    if !(sv[sv.len() - 1] > rel * smax) {
        return Err(Error::Singular(format!(
            "B is not invertible on range(S) (sigma_min = {:e}); M is singular",
            sv[sv.len() - 1]
        )));
    }
    let binv = &e * small.partial_piv_lu().inverse() * e.adjoint();
    let sis = s * &inv1;
    Ok(&inv1 + inv1.as_ref() * s * &binv * &sis)
}
