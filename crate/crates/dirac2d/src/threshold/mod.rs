//! Zero-energy threshold analysis: T = U + vG₀,₀v*, its kernel S₁, the
//! sub-kernel S₂ on which ∫v*φ vanishes, and the low-energy inversion of
//! M±(λ) = U + v𝓡₀±(λ)v*.
//!
//! All finite-rank work happens in the coordinates of an orthonormal basis
//! Φ = [Φ_Q | Φ_S2] of S₁L² (coefficient vectors in the weighted form).

mod forms;
mod jn;
mod tune;

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discretize::{
    assemble, factor_potential, resolvent_matrix, write_snapshot, BlockOperator, FactoredPotential, Grid2,
    KernelSpec, PotentialSpec, SpinorField,
};
use crate::error::{Error, Result};
use crate::freeops::{alpha_dot, bracket, Block, ExpansionTag, Point2};
use crate::linalg::{self, CMat};
use crate::specfun::{g_unchecked, Sign};

pub use forms::{eigenprojection_p0, verify_form_identity, FormIdentity, P0Result};
pub use jn::jn_invert;
pub use tune::{tune_coupling, TuneOptions, TuneResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Kernel threshold relative to σ_max(T).
    pub kernel_rel: f64,
    /// Required separation factor between kernel and non-kernel values.
    pub gap_factor: f64,
    /// Threshold for |∫v*φ| relative to ‖v‖_L²‖φ‖.
    pub moment_rel: f64,
    /// Largest accepted condition estimate of a dense inversion.
    pub max_condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { kernel_rel: 1e-6, gap_factor: 10.0, moment_rel: 1e-6, max_condition: 1e12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Regular,
    PResonance,
    Eigenvalue,
    Mixed,
}

impl Classification {
    pub fn from_ranks(rank_s1: usize, rank_s2: usize) -> Self {
        match (rank_s1, rank_s2) {
            (0, _) => Classification::Regular,
            (_, 0) => Classification::PResonance,
            (a, b) if a == b => Classification::Eigenvalue,
            _ => Classification::Mixed,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Classification::Regular => "regular",
            Classification::PResonance => "p_resonance",
            Classification::Eigenvalue => "eigenvalue",
            Classification::Mixed => "mixed",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKind {
    /// φ ∈ range(Q): ∫v*φ ≠ 0.
    Resonance,
    /// φ ∈ range(S₂).
    Eigen,
}

/// Per-basis-vector verification data.
#[derive(Debug, Clone, Serialize)]
pub struct PhiDiagnostics {
    pub kind: PhiKind,
    /// |∫v*φ|
    pub moment: f64,
    /// ‖(D₀+V)ψ‖/‖ψ‖ on the grid, ψ = −G₀,₀v*φ.
    pub residual: f64,
    /// Mass of ψ over |x| > L/2 relative to its box mass.
    pub tail_ratio: f64,
    /// Same for ψ minus the 1/|x| profile −iα·x/(2π⟨x⟩²)·∫v*φ.
    pub profile_tail_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub classification: Classification,
    pub rank_s1: usize,
    pub rank_s2: usize,
    pub sigma_min_t: f64,
    pub sigma_max_t: f64,
    pub kernel_tol: f64,
    /// Smallest |eigenvalues| of T, ascending.
    pub smallest: Vec<f64>,
    pub coupling: f64,
    pub basis_s1: Vec<SpinorField>,
    pub resonance_functions: Vec<SpinorField>,
    pub diagnostics: Vec<PhiDiagnostics>,
}

impl ThresholdReport {
    /// Structured text: one `key = value` per line, then one line per φ.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "classification = {}", self.classification);
        let _ = writeln!(s, "coupling = {:.12e}", self.coupling);
        let _ = writeln!(s, "rank_s1 = {}", self.rank_s1);
        let _ = writeln!(s, "rank_s2 = {}", self.rank_s2);
        let _ = writeln!(s, "sigma_min_t = {:.6e}", self.sigma_min_t);
        let _ = writeln!(s, "sigma_max_t = {:.6e}", self.sigma_max_t);
        let _ = writeln!(s, "kernel_tol = {:.6e}", self.kernel_tol);
        let small: Vec<String> = self.smallest.iter().map(|v| format!("{v:.6e}")).collect();
        let _ = writeln!(s, "smallest_abs_eigenvalues = [{}]", small.join(", "));
        for (k, d) in self.diagnostics.iter().enumerate() {
            let _ = writeln!(
                s,
                "phi[{k}] kind = {:?} moment = {:.3e} residual = {:.3e} tail_ratio = {:.3e} profile_tail_ratio = {:.3e}",
                d.kind, d.moment, d.residual, d.tail_ratio, d.profile_tail_ratio
            );
        }
        s
    }

    /// Dump φ (or ψ) vectors as an N × r snapshot whose (k, j) block is
    /// diag(f_j(x_k)₀, f_j(x_k)₁).
    pub fn write_fields<W: Write>(fields: &[SpinorField], out: W, tag: &str) -> Result<()> {
        let Some(first) = fields.first() else {
            return write_snapshot(out, 0, 0, 0.0, tag, 0.0, std::iter::empty());
        };
        let grid = first.grid().clone();
        let n = grid.len();
        let r = fields.len();
        let blocks = (0..n).flat_map(move |k| {
            fields.iter().map(move |f| Block::diag(f.values[k][0], f.values[k][1]))
        });
        write_snapshot(out, n, r, grid.half_width(), tag, 0.0, blocks)
    }
}

/// Threshold data for one potential on one grid, reused by every λ.
#[derive(Debug, Clone)]
pub struct ThresholdAnalysis {
    grid: Arc<Grid2>,
    fp: FactoredPotential,
    tol: Tolerances,
    a00: CMat,
    t: CMat,
    abs_eigs: Vec<f64>,
    sigma_max: f64,
    kernel_tol: f64,
    /// Orthonormal basis [Φ_Q | Φ_S2], 2N × r.
    phi: CMat,
    rank_q: usize,
    /// ∫v*φ for the basis columns (exactly zero on the S₂ part).
    x: CMat,
    /// Φ†vG₁,₀v*Φ
    k10: CMat,
}

/// Orthonormal eigenvectors of a Hermitian matrix with |eigenvalue| < tol,
/// refusing when some eigenvalue falls in [tol, gap·tol]. Also returns all
/// |eigenvalues| in ascending order.
fn select_kernel(vals: &[f64], vecs: &CMat, tol: f64, gap: f64) -> Result<(Vec<f64>, CMat)> {
    let ambiguous: Vec<f64> = vals.iter().map(|v| v.abs()).filter(|a| *a >= tol && *a <= gap * tol).collect();
    if !ambiguous.is_empty() {
        return Err(Error::AmbiguousKernel { values: ambiguous, tol, gap: gap * tol });
    }
    let idx: Vec<usize> = (0..vals.len()).filter(|&k| vals[k].abs() < tol).collect();
    let basis = Mat::from_fn(vecs.nrows(), idx.len(), |i, c| vecs[(i, idx[c])]);
    let mut abs: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    Ok((abs, basis))
}

/// ∫v*φ for coefficient columns: X = Σₖ √wₖ vₖ* cₖ (2 × r).
fn moments(grid: &Grid2, fp: &FactoredPotential, phi: &CMat) -> CMat {
    let sw = grid.sqrt_weights();
    let mut x = Mat::zeros(2, phi.ncols());
    for c in 0..phi.ncols() {
        for (k, v) in fp.v.iter().enumerate() {
            let va = v.adjoint();
            let f = [phi[(2 * k, c)], phi[(2 * k + 1, c)]];
            let y = va.apply(f);
            x[(0, c)] += y[0] * sw[k];
            x[(1, c)] += y[1] * sw[k];
        }
    }
    x
}

/// ‖v‖_L² over the grid.
fn v_norm(grid: &Grid2, fp: &FactoredPotential) -> f64 {
    fp.v.iter().zip(grid.weights()).map(|(v, w)| w * v.frobenius().powi(2)).sum::<f64>().sqrt()
}

/// Rotate a basis of S₁ into [Q | S₂] using the SVD of its moments.
fn split_s2(grid: &Grid2, fp: &FactoredPotential, phi: &CMat, tol: &Tolerances) -> Result<(CMat, usize, CMat)> {
    let r = phi.ncols();
    if r == 0 {
        return Ok((phi.clone(), 0, Mat::zeros(2, 0)));
    }
    let x = moments(grid, fp, phi);
    let svd = x.svd().map_err(|e| Error::Singular(format!("moment SVD failed: {e:?}")))?;
    let s = svd.S();
    let w = svd.V();
    let tol_s2 = tol.moment_rel * v_norm(grid, fp);
    let svals: Vec<f64> = (0..r.min(2)).map(|k| s[k].re).collect();
    let ambiguous: Vec<f64> =
        svals.iter().copied().filter(|&v| v >= tol_s2 && v <= tol.gap_factor * tol_s2).collect();
    if !ambiguous.is_empty() {
        return Err(Error::AmbiguousKernel { values: ambiguous, tol: tol_s2, gap: tol.gap_factor * tol_s2 });
    }
    let rank_q = svals.iter().filter(|&&v| v > tol_s2).count();
    if rank_q > 2 {
        return Err(Error::Inconsistency(format!("rank(Q) = {rank_q} exceeds 2")));
    }
    let rotated = phi * w;
    let mut xr = &x * w;
    for c in rank_q..r {
        xr[(0, c)] = Complex64::default();
        xr[(1, c)] = Complex64::default();
    }
    Ok((rotated, rank_q, xr))
}

fn projector(basis: &CMat) -> CMat {
    basis * basis.adjoint()
}

/// T = U + vG₀,₀v*.
pub fn build_t(fp: &FactoredPotential, grid: &Arc<Grid2>) -> Result<BlockOperator> {
    if fp.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let a00 = assemble(KernelSpec::Expansion(ExpansionTag::G00), grid, None, None)?;
    Ok(BlockOperator::from_matrix(grid.clone(), t_from_a00(fp, a00.matrix()), true)?)
}

fn t_from_a00(fp: &FactoredPotential, a00: &CMat) -> CMat {
    let va = fp.v_adjoint();
    let mut t = linalg::block_diag_right(linalg::block_diag_left(&fp.v, a00.as_ref()).as_ref(), &va);
    for (k, u) in fp.u.iter().enumerate() {
        t[(2 * k, 2 * k)] += u[0];
        t[(2 * k + 1, 2 * k + 1)] += u[1];
    }
    linalg::hermitian_part(t.as_ref())
}

/// Orthogonal projection onto the eigenvectors of T with |eigenvalue| < tol.
pub fn riesz_projection_s1(t: &BlockOperator, tol: f64) -> Result<(BlockOperator, usize)> {
    let (vals, vecs) = linalg::hermitian_eigen(t.matrix().as_ref())?;
    let (_, basis) = select_kernel(&vals, &vecs, tol, Tolerances::default().gap_factor)?;
    let rank = basis.ncols();
    Ok((BlockOperator::from_matrix(t.grid().clone(), projector(&basis), true)?, rank))
}

/// S₂ (kernel of S₁vG₁,₁v*S₁ within S₁L²) and Q = S₁ − S₂.
pub fn build_s2(s1: &BlockOperator, fp: &FactoredPotential) -> Result<(BlockOperator, BlockOperator)> {
    let grid = s1.grid();
    let (vals, vecs) = linalg::hermitian_eigen(s1.matrix().as_ref())?;
    let idx: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 0.5).collect();
    let basis = Mat::from_fn(vecs.nrows(), idx.len(), |i, c| vecs[(i, idx[c])]);
    let (rot, rank_q, _) = split_s2(grid, fp, &basis, &Tolerances::default())?;
    let q = rot.subcols(0, rank_q).to_owned();
    let s2 = rot.subcols(rank_q, rot.ncols() - rank_q).to_owned();
    Ok((
        BlockOperator::from_matrix(grid.clone(), projector(&s2), true)?,
        BlockOperator::from_matrix(grid.clone(), projector(&q), true)?,
    ))
}

/// Classify the threshold of `spec` on `grid`.
pub fn classify(spec: &PotentialSpec, grid: &Arc<Grid2>, tol: Tolerances) -> Result<ThresholdReport> {
    ThresholdAnalysis::new(spec, grid, tol)?.report()
}

/// Result of inverting M±(λ).
#[derive(Debug, Clone)]
pub struct MInverse {
    pub sign: Sign,
    pub lambda: f64,
    pub inverse: CMat,
    pub condition: f64,
    /// max |M·M⁻¹ − I|
    pub residual: f64,
    /// (1/λ)ΦA±(λ)⁻¹Φ† when S₁ ≠ 0.
    pub leading: Option<CMat>,
    /// Spectral norm of M⁻¹ minus the leading term.
    pub e4_norm: Option<f64>,
}

/// An operator Φ C Φ† of rank ≤ r on the grid.
#[derive(Debug, Clone)]
pub struct FiniteRankOperator {
    pub basis: CMat,
    pub core: CMat,
}

impl FiniteRankOperator {
    pub fn to_matrix(&self) -> CMat {
        &self.basis * &self.core * self.basis.adjoint()
    }
}

impl ThresholdAnalysis {
    pub fn new(spec: &PotentialSpec, grid: &Arc<Grid2>, tol: Tolerances) -> Result<Self> {
        let fp = factor_potential(spec, grid)?;
        Self::from_factored(fp, grid, tol)
    }

    pub fn from_factored(fp: FactoredPotential, grid: &Arc<Grid2>, tol: Tolerances) -> Result<Self> {
        if fp.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let a00 = assemble(KernelSpec::Expansion(ExpansionTag::G00), grid, None, None)?.into_matrix();
        let t = t_from_a00(&fp, &a00);
        let (vals, vecs) = linalg::hermitian_eigen(t.as_ref())?;
        let sigma_max = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let kernel_tol = tol.kernel_rel * sigma_max;
        let (abs_eigs, basis) = select_kernel(&vals, &vecs, kernel_tol, tol.gap_factor)?;
        let (phi, rank_q, x) = split_s2(grid, &fp, &basis, &tol)?;
        let k10 = if phi.ncols() > 0 {
            let alog = assemble(KernelSpec::Expansion(ExpansionTag::G10), grid, None, None)?.into_matrix();
            let vphi = linalg::block_diag_left(&fp.v_adjoint(), phi.as_ref());
            let k = vphi.adjoint() * &alog * &vphi;
            linalg::hermitian_part(k.as_ref())
        } else {
            Mat::zeros(0, 0)
        };
        Ok(Self { grid: grid.clone(), fp, tol, a00, t, abs_eigs, sigma_max, kernel_tol, phi, rank_q, x, k10 })
    }

    pub fn grid(&self) -> &Arc<Grid2> {
        &self.grid
    }

    pub fn factored(&self) -> &FactoredPotential {
        &self.fp
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn rank_s1(&self) -> usize {
        self.phi.ncols()
    }

    pub fn rank_q(&self) -> usize {
        self.rank_q
    }

    pub fn rank_s2(&self) -> usize {
        self.phi.ncols() - self.rank_q
    }

    pub fn classification(&self) -> Classification {
        Classification::from_ranks(self.rank_s1(), self.rank_s2())
    }

    pub fn sigma_min(&self) -> f64 {
        self.abs_eigs.first().copied().unwrap_or(f64::NAN)
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn kernel_tol(&self) -> f64 {
        self.kernel_tol
    }

    /// |eigenvalues| of T, ascending.
    pub fn abs_eigenvalues(&self) -> &[f64] {
        &self.abs_eigs
    }

    /// Orthonormal S₁ basis [Φ_Q | Φ_S2] as coefficient columns.
    pub fn basis(&self) -> &CMat {
        &self.phi
    }

    /// ∫v*φ for the basis columns.
    pub fn moments(&self) -> &CMat {
        &self.x
    }

    /// Φ†vG₁,₀v*Φ
    pub fn k10(&self) -> &CMat {
        &self.k10
    }

    /// Φ†vG₁,₁v*Φ = X†X
    pub fn p11(&self) -> CMat {
        self.x.adjoint() * &self.x
    }

    pub fn g00_matrix(&self) -> &CMat {
        &self.a00
    }

    pub fn t_operator(&self) -> BlockOperator {
        BlockOperator::from_matrix(self.grid.clone(), self.t.clone(), true).expect("dimensions match")
    }

    fn op(&self, m: CMat) -> BlockOperator {
        BlockOperator::from_matrix(self.grid.clone(), m, true).expect("dimensions match")
    }

    pub fn s1(&self) -> BlockOperator {
        self.op(projector(&self.phi))
    }

    pub fn q(&self) -> BlockOperator {
        self.op(projector(&self.phi.subcols(0, self.rank_q).to_owned()))
    }

    pub fn s2(&self) -> BlockOperator {
        self.op(projector(&self.phi.subcols(self.rank_q, self.rank_s2()).to_owned()))
    }

    /// T₁ = (T + S₁)⁻¹
    pub fn t1(&self) -> Result<BlockOperator> {
        let m = &self.t + projector(&self.phi);
        let inv = linalg::checked_inverse(m.as_ref(), 1e-13, "T + S1")?;
        Ok(BlockOperator::from_matrix(self.grid.clone(), inv, false)?)
    }

    pub fn phi_fields(&self) -> Vec<SpinorField> {
        (0..self.phi.ncols()).map(|c| SpinorField::from_coefficients(&self.grid, self.phi.col(c).as_mat())).collect()
    }

    /// ψ = −G₀,₀v*φ for every basis vector, as coefficient columns.
    pub fn psi_coefficients(&self) -> CMat {
        let vphi = linalg::block_diag_left(&self.fp.v_adjoint(), self.phi.as_ref());
        let mut psi = &self.a00 * &vphi;
        psi *= faer::Scale(Complex64::new(-1.0, 0.0));
        psi
    }

    pub fn resonance_functions(&self) -> Vec<SpinorField> {
        let psi = self.psi_coefficients();
        (0..psi.ncols()).map(|c| SpinorField::from_coefficients(&self.grid, psi.col(c).as_mat())).collect()
    }

    /// A±(λ) = g±(λ)·X†X + K₁₀ in basis coordinates; λ is signed.
    pub fn a_matrix(&self, sign: Sign, lambda: f64) -> CMat {
        self.a_matrix_g(g_eff(sign, lambda))
    }

    /// g·X†X + K₁₀
    pub fn a_matrix_g(&self, g: Complex64) -> CMat {
        let p = self.p11();
        Mat::from_fn(p.nrows(), p.ncols(), |i, j| p[(i, j)] * g + self.k10[(i, j)])
    }

    /// A±(λ)⁻¹ by the Feshbach formula over [Q | S₂].
    pub fn invert_a(&self, sign: Sign, lambda: f64) -> Result<CMat> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be finite and nonzero, got {lambda}")));
        }
        self.invert_a_g(g_eff(sign, lambda), lambda)
    }

    /// (g·X†X + K₁₀)⁻¹; `lambda` only labels errors.
    pub fn invert_a_g(&self, g: Complex64, lambda: f64) -> Result<CMat> {
        let r = self.rank_s1();
        if r == 0 {
            return Err(Error::Precondition("S1 is trivial; A(lambda) is not defined".into()));
        }
        let a = self.a_matrix_g(g);
        let rq = self.rank_q;
        let r2 = r - rq;
        let a22inv = if r2 > 0 {
            let a22 = a.submatrix(rq, rq, r2, r2).to_owned();
            linalg::checked_inverse(a22.as_ref(), 1e-12, "S2 v G10 v* S2")
                .map_err(|e| Error::Inconsistency(format!("{e}")))?
        } else {
            Mat::zeros(0, 0)
        };
        if rq == 0 {
            return Ok(a22inv);
        }
        let a11 = a.submatrix(0, 0, rq, rq).to_owned();
        let a12 = a.submatrix(0, rq, rq, r2).to_owned();
        let a21 = a.submatrix(rq, 0, r2, rq).to_owned();
        let schur = if r2 > 0 { &a11 - &a12 * &a22inv * &a21 } else { a11 };
        let sinv = linalg::checked_inverse(schur.as_ref(), 1e-10, "Q block")
            .map_err(|_| Error::LambdaTooLarge(lambda))?;
        if r2 == 0 {
            return Ok(sinv);
        }
        let mut out = Mat::zeros(r, r);
        let up = &sinv * &a12 * &a22inv;
        let lo = &a22inv * &a21 * &sinv;
        let corner = &a22inv + &lo * &a12 * &a22inv;
        out.submatrix_mut(0, 0, rq, rq).copy_from(&sinv);
        out.submatrix_mut(0, rq, rq, r2).copy_from(-&up);
        out.submatrix_mut(rq, 0, r2, rq).copy_from(-&lo);
        out.submatrix_mut(rq, rq, r2, r2).copy_from(&corner);
        Ok(out)
    }

    pub fn invert_a_operator(&self, sign: Sign, lambda: f64) -> Result<FiniteRankOperator> {
        Ok(FiniteRankOperator { basis: self.phi.clone(), core: self.invert_a(sign, lambda)? })
    }

    /// M±(λ) = U + v𝓡₀±(λ)v* (weighted form).
    pub fn m_matrix(&self, sign: Sign, lambda: f64) -> CMat {
        let r = resolvent_matrix(&self.grid, sign, lambda);
        let va = self.fp.v_adjoint();
        let mut m = linalg::block_diag_right(linalg::block_diag_left(&self.fp.v, r.as_ref()).as_ref(), &va);
        for (k, u) in self.fp.u.iter().enumerate() {
            m[(2 * k, 2 * k)] += u[0];
            m[(2 * k + 1, 2 * k + 1)] += u[1];
        }
        m
    }

    /// Dense inversion of M±(λ), with the leading singular term split off
    /// when the threshold is not regular.
    pub fn invert_m(&self, sign: Sign, lambda: f64) -> Result<MInverse> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be finite and nonzero, got {lambda}")));
        }
        let m = self.m_matrix(sign, lambda);
        let (inverse, condition) = linalg::inverse_with_condition(m.as_ref());
        if !(condition <= self.tol.max_condition) {
            return Err(Error::IllConditioned { lambda, cond: condition });
        }
        let residual = linalg::identity_residual(m.as_ref(), inverse.as_ref());
        let (leading, e4_norm) = if self.rank_s1() > 0 {
            let core = self.invert_a(sign, lambda)?;
            let mut lead = &self.phi * &core * self.phi.adjoint();
            lead *= faer::Scale(Complex64::new(1.0 / lambda, 0.0));
            let e4 = &inverse - &lead;
            (Some(lead), Some(linalg::spectral_norm(e4.as_ref())))
        } else {
            (None, None)
        };
        Ok(MInverse { sign, lambda, inverse, condition, residual, leading, e4_norm })
    }

    pub fn report(&self) -> Result<ThresholdReport> {
        let basis_s1 = self.phi_fields();
        let resonance_functions = self.resonance_functions();
        let mut diagnostics = Vec::with_capacity(basis_s1.len());
        for (c, psi) in resonance_functions.iter().enumerate() {
            let x = [self.x[(0, c)], self.x[(1, c)]];
            diagnostics.push(PhiDiagnostics {
                kind: if c < self.rank_q { PhiKind::Resonance } else { PhiKind::Eigen },
                moment: (x[0].norm_sqr() + x[1].norm_sqr()).sqrt(),
                residual: dirac_residual(psi, &self.fp)?,
                tail_ratio: tail_ratio(psi, |_| [Complex64::default(); 2]),
                profile_tail_ratio: tail_ratio(psi, |p| p_wave_profile(p).apply(x)),
            });
        }
        let smallest = self.abs_eigs.iter().take(8).copied().collect();
        Ok(ThresholdReport {
            classification: self.classification(),
            rank_s1: self.rank_s1(),
            rank_s2: self.rank_s2(),
            sigma_min_t: self.sigma_min(),
            sigma_max_t: self.sigma_max,
            kernel_tol: self.kernel_tol,
            smallest,
            coupling: self.fp.spec.coupling,
            basis_s1,
            resonance_functions,
            diagnostics,
        })
    }
}

/// g of the branch used at signed λ.
pub fn g_eff(sign: Sign, lambda: f64) -> Complex64 {
    let eff = crate::freeops::kernels::effective_sign(sign, lambda);
    g_unchecked(eff, lambda.abs())
}

/// g_eff written through u = −log|λ|, usable where |λ| underflows.
pub fn g_eff_log(sign: Sign, negative: bool, u: f64) -> Complex64 {
    let eff = if negative { sign.flip() } else { sign };
    Complex64::new((u + std::f64::consts::LN_2 - crate::specfun::EULER_GAMMA) / (2.0 * std::f64::consts::PI), eff.value() * 0.25)
}

/// −iα·x/(2π⟨x⟩²), the far-field shape of ψ for ∫v*φ ≠ 0.
pub fn p_wave_profile(p: Point2) -> Block {
    let b2 = bracket(p).powi(2);
    alpha_dot(p.x1, p.x2).scale(Complex64::new(0.0, -1.0 / (2.0 * std::f64::consts::PI * b2)))
}

/// ‖(D₀ + V)ψ‖/‖ψ‖ with D₀ = −iα·∇ applied by spectral differentiation.
pub fn dirac_residual(psi: &SpinorField, fp: &FactoredPotential) -> Result<f64> {
    let d0 = apply_d0(psi);
    if fp.potential.len() != psi.values.len() {
        return Err(Error::GridMismatch);
    }
    let values: Vec<[Complex64; 2]> = d0
        .iter()
        .zip(&psi.values)
        .zip(&fp.potential)
        .map(|((d, f), v)| {
            let vf = v.apply(*f);
            [d[0] + vf[0], d[1] + vf[1]]
        })
        .collect();
    let res = SpinorField::new(psi.grid(), values)?;
    Ok(res.l2_norm() / psi.l2_norm())
}

/// D₀ψ = −i(α₁∂₁ + α₂∂₂)ψ at the grid nodes.
pub fn apply_d0(psi: &SpinorField) -> Vec<[Complex64; 2]> {
    let grid = psi.grid();
    let n = grid.n_per_axis();
    let d = grid.diff_matrix();
    let v = &psi.values;
    let i = Complex64::new(0.0, 1.0);
    let mut out = vec![[Complex64::default(); 2]; n * n];
    for a in 0..n {
        for b in 0..n {
            let mut d1 = [Complex64::default(); 2];
            let mut d2 = [Complex64::default(); 2];
            for c in 0..n {
                let wa = d[a * n + c];
                let wb = d[b * n + c];
                for s in 0..2 {
                    d1[s] += v[c * n + b][s] * wa;
                    d2[s] += v[a * n + c][s] * wb;
                }
            }
            // upper: −i∂₁ψ₂ − ∂₂ψ₂; lower: −i∂₁ψ₁ + ∂₂ψ₁
            out[a * n + b] = [-i * d1[1] - d2[1], -i * d1[0] + d2[0]];
        }
    }
    out
}

/// Mass of ψ − f over |x| > L/2 relative to the box mass of ψ.
fn tail_ratio(psi: &SpinorField, f: impl Fn(Point2) -> [Complex64; 2]) -> f64 {
    let grid = psi.grid();
    let half = 0.5 * grid.half_width();
    let mut tail = 0.0;
    let mut total = 0.0;
    for ((p, v), w) in grid.nodes().iter().zip(&psi.values).zip(grid.weights()) {
        total += w * (v[0].norm_sqr() + v[1].norm_sqr());
        if p.norm() > half {
            let g = f(*p);
            tail += w * ((v[0] - g[0]).norm_sqr() + (v[1] - g[1]).norm_sqr());
        }
    }
    tail / total
}
