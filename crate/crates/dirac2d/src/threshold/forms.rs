use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::{moments, v_norm, ThresholdAnalysis, Tolerances};
use crate::discretize::{
    assemble, gauss_legendre, g00_rows, BlockOperator, FactoredPotential, Grid2, KernelSpec, SpinorField,
};
use crate::error::{Error, Result};
use crate::freeops::{ExpansionTag, Point2};
use crate::linalg;

const THETA_PANELS: usize = 8;
const THETA_ORDER: usize = 12;
const RADIAL_ORDER: usize = 16;

#[derive(Debug, Clone)]
pub struct P0Result {
    /// Ψ(Ψ†Ψ)⁻¹Ψ† with Ψ = −G₀,₀v*Φ_S2.
    pub projector: BlockOperator,
    /// Ψ[S₂vG₁,₀v*S₂]⁻¹Ψ†, equal to the above when Ψ†Ψ = S₂vG₁,₀v*S₂.
    pub form_projector: BlockOperator,
    /// ‖Ψ†Ψ − S₂vG₁,₀v*S₂‖_F / ‖S₂vG₁,₀v*S₂‖_F
    pub gram_mismatch: f64,
    pub rank: usize,
}

/// Orthogonal projection onto the zero-energy eigenfunctions.
pub fn eigenprojection_p0(analysis: &ThresholdAnalysis) -> Result<P0Result> {
    let r2 = analysis.rank_s2();
    if r2 == 0 {
        return Err(Error::NoEigenspace);
    }
    let rq = analysis.rank_q();
    let psi = analysis.psi_coefficients().subcols(rq, r2).to_owned();
    let gram = linalg::hermitian_part((psi.adjoint() * &psi).as_ref());
    let k22 = analysis.k10().submatrix(rq, rq, r2, r2).to_owned();
    let ginv = linalg::checked_inverse(gram.as_ref(), 1e-12, "eigenfunction Gram matrix")?;
    let kinv = linalg::checked_inverse(k22.as_ref(), 1e-12, "S2 v G10 v* S2")?;
    let p = linalg::hermitian_part((&psi * &ginv * psi.adjoint()).as_ref());
    let pk = &psi * &kinv * psi.adjoint();
    let gram_mismatch = linalg::frobenius((&gram - &k22).as_ref()) / linalg::frobenius(k22.as_ref());
    let grid = analysis.grid().clone();
    Ok(P0Result {
        projector: BlockOperator::from_matrix(grid.clone(), p, true)?,
        form_projector: BlockOperator::from_matrix(grid, pk, false)?,
        gram_mismatch,
        rank: r2,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct FormIdentity {
    /// ‖G₀,₀v*φ‖² over ℝ²
    pub lhs: f64,
    /// ⟨v*φ, G₁,₀v*φ⟩
    pub rhs: Complex64,
    /// Part of lhs from the box.
    pub box_part: f64,
    /// Part of lhs from outside the box.
    pub exterior_part: f64,
}

impl FormIdentity {
    pub fn relative_gap(&self) -> f64 {
        (Complex64::new(self.lhs, 0.0) - self.rhs).norm() / self.lhs.abs()
    }
}

/// Both sides of ‖G₀,₀v*φ‖² = ⟨v*φ, G₁,₀v*φ⟩ for φ with ∫v*φ = 0.
pub fn verify_form_identity(phi: &SpinorField, fp: &FactoredPotential, grid: &Arc<Grid2>) -> Result<FormIdentity> {
    if !phi.grid().same_as(grid) || fp.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let c = phi.coefficients();
    let x = moments(grid, fp, &c);
    let moment = (x[(0, 0)].norm_sqr() + x[(1, 0)].norm_sqr()).sqrt();
    let bound = Tolerances::default().moment_rel * v_norm(grid, fp) * phi.l2_norm();
    if moment > bound {
        return Err(Error::Precondition(format!("|int v* phi| = {moment:e} exceeds {bound:e}")));
    }
    let f = linalg::block_diag_left(&fp.v_adjoint(), c.as_ref());
    let a00 = assemble(KernelSpec::Expansion(ExpansionTag::G00), grid, None, None)?;
    let alog = assemble(KernelSpec::Expansion(ExpansionTag::G10), grid, None, None)?;
    let psi = a00.matrix() * &f;
    let box_part: f64 = (0..psi.nrows()).map(|i| psi[(i, 0)].norm_sqr()).sum();
    let (pts, wts) = exterior_rule(grid.half_width());
    let rows = g00_rows(grid, &pts);
    let ext = &rows * &f;
    let exterior_part: f64 =
        wts.iter().enumerate().map(|(k, w)| w * (ext[(2 * k, 0)].norm_sqr() + ext[(2 * k + 1, 0)].norm_sqr())).sum();
    let rhs = (f.adjoint() * alog.matrix() * &f)[(0, 0)];
    Ok(FormIdentity { lhs: box_part + exterior_part, rhs, box_part, exterior_part })
}

/// Quadrature for the exterior of [−L, L]²: θ in octant panels, and
/// r = r_edge(θ)/s with s ∈ (0, 1], so dA = r_edge²/s³ ds dθ.
fn exterior_rule(l: f64) -> (Vec<Point2>, Vec<f64>) {
    let (tn, tw) = gauss_legendre(THETA_ORDER);
    let (sn, sw) = gauss_legendre(RADIAL_ORDER);
    let width = 2.0 * PI / THETA_PANELS as f64;
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for p in 0..THETA_PANELS {
        let a = p as f64 * width;
        for (t, w) in tn.iter().zip(&tw) {
            let th = a + 0.5 * width * (t + 1.0);
            let wt = 0.5 * width * w;
            let (s_th, c_th) = th.sin_cos();
            let edge = l / c_th.abs().max(s_th.abs());
            for (s, ws) in sn.iter().zip(&sw) {
                let s = 0.5 * (s + 1.0);
                let r = edge / s;
                pts.push(Point2::new(r * c_th, r * s_th));
                wts.push(wt * 0.5 * ws * edge * edge / (s * s * s));
            }
        }
    }
    (pts, wts)
}
