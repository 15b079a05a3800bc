//! Locally corrected Nyström quadrature for the weakly singular kernels
//! G₀,₀ ~ 1/r and G₀ ~ log r.
//!
//! For a target point p the kernel is split with a C^∞ bump η of radius ρ
//! (a few local node spacings). The smooth far part (1 − η)K uses the plain
//! tensor weights. The near part ηK is integrated in polar coordinates
//! around p against the tensor Lagrange interpolant of the density, which
//! turns it into node weights.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::gauss_legendre;
use super::{BlockOperator, Grid2};
use crate::error::{Error, Result};
use crate::freeops::kernels::effective_sign;
use crate::freeops::{resolvent_kernel, spectral_jump, smooth_cutoff, Block, CutoffSpec, ExpansionTag, Point2};
use crate::specfun::{g_unchecked, hankel1_01, Sign};

const BUMP_FACTOR: f64 = 4.0;
const PLATEAU: f64 = 0.3;
const RADIAL_ORDER: usize = 16;
const ANGULAR_ORDER: usize = 48;

fn glue(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Bump in t = r/ρ: 1 on [0, PLATEAU], 0 beyond 1.
fn bump(t: f64) -> f64 {
    let s = (t - PLATEAU) / (1.0 - PLATEAU);
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let a = glue(1.0 - s);
        a / (a + glue(s))
    }
}

/// Collocation weights of the singular kernels at one target point:
/// ∫K(p, z) f(z) dz ≈ Σⱼ rowⱼ f(xⱼ) for K = (p − z)₁/(2π r²),
/// (p − z)₂/(2π r²) and −log r/(2π).
#[derive(Debug, Clone)]
pub(crate) struct SingularRow {
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub glog: Vec<f64>,
}

fn bump_radius(grid: &Grid2, p: Point2) -> f64 {
    BUMP_FACTOR * grid.spacing_at(p.x1).max(grid.spacing_at(p.x2))
}

fn distance_to_box(grid: &Grid2, p: Point2) -> f64 {
    let l = grid.half_width();
    let dx = (p.x1.abs() - l).max(0.0);
    let dy = (p.x2.abs() - l).max(0.0);
    dx.hypot(dy)
}

/// Whether p needs the local correction (its bump disk meets the box).
pub(crate) fn needs_correction(grid: &Grid2, p: Point2) -> bool {
    distance_to_box(grid, p) < bump_radius(grid, p)
}

pub(crate) fn singular_row(grid: &Grid2, p: Point2) -> SingularRow {
    let n_nodes = grid.len();
    let n = grid.n_per_axis();
    let mut row = SingularRow { gx: vec![0.0; n_nodes], gy: vec![0.0; n_nodes], glog: vec![0.0; n_nodes] };
    let rho = bump_radius(grid, p);
    let inv2pi = 1.0 / (2.0 * PI);

    for (j, (&x, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        let d = p - x;
        let r2 = d.x1 * d.x1 + d.x2 * d.x2;
        if r2 == 0.0 {
            continue;
        }
        let r = r2.sqrt();
        let far = 1.0 - bump(r / rho);
        if far == 0.0 {
            continue;
        }
        let c = w * far * inv2pi;
        row.gx[j] = c * d.x1 / r2;
        row.gy[j] = c * d.x2 / r2;
        row.glog[j] = -c * r.ln();
    }

    if distance_to_box(grid, p) >= rho {
        return row;
    }

    // r = ρu², so dr = 2ρu du smooths both r·K factors at the origin.
    let (u, wu) = gauss_legendre(RADIAL_ORDER);
    let dtheta = 2.0 * PI / ANGULAR_ORDER as f64;
    let angles: Vec<(f64, f64)> =
        (0..ANGULAR_ORDER).map(|k| (dtheta * (k as f64 + 0.5)).sin_cos()).collect();
    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    for (uq, wq) in u.iter().zip(&wu) {
        let s = 0.5 * (uq + 1.0);
        let r = rho * s * s;
        let wr = rho * 2.0 * s * 0.5 * wq;
        let eta = bump(r / rho);
        if eta == 0.0 {
            continue;
        }
        let base = wr * dtheta * eta * inv2pi;
        let clog = -base * r * r.ln();
        for &(sin, cos) in &angles {
            let z = Point2::new(p.x1 + r * cos, p.x2 + r * sin);
            if !grid.contains(z) {
                continue;
            }
            grid.lagrange_into(z.x1, &mut l1);
            grid.lagrange_into(z.x2, &mut l2);
            let cx = -base * cos;
            let cy = -base * sin;
            for a in 0..n {
                let la = l1[a];
                let off = a * n;
                let (rx, ry, rl) = (cx * la, cy * la, clog * la);
                for b in 0..n {
                    let lb = l2[b];
                    row.gx[off + b] += rx * lb;
                    row.gy[off + b] += ry * lb;
                    row.glog[off + b] += rl * lb;
                }
            }
        }
    }
    row
}

/// Symmetric-weighted corrected matrices on the grid nodes: `ax`, `ay`
/// antisymmetric (so iα·(ax, ay) is Hermitian) and `alog` symmetric, all
/// row-major N×N.
#[derive(Debug)]
pub struct NearTables {
    pub(crate) ax: Vec<f64>,
    pub(crate) ay: Vec<f64>,
    pub(crate) alog: Vec<f64>,
}

impl NearTables {
    pub(crate) fn build(grid: &Grid2) -> Self {
        let n = grid.len();
        let sw = grid.sqrt_weights();
        let rows: Vec<SingularRow> = grid.nodes().par_iter().map(|&p| singular_row(grid, p)).collect();
        let mut ax = vec![0.0; n * n];
        let mut ay = vec![0.0; n * n];
        let mut alog = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let sij = sw[i] / sw[j];
                let sji = sw[j] / sw[i];
                ax[i * n + j] = 0.5 * (rows[i].gx[j] * sij - rows[j].gx[i] * sji);
                ay[i * n + j] = 0.5 * (rows[i].gy[j] * sij - rows[j].gy[i] * sji);
                alog[i * n + j] = 0.5 * (rows[i].glog[j] * sij + rows[j].glog[i] * sji);
            }
        }
        Self { ax, ay, alog }
    }
}

/// iα·(a, b) = [[0, ia + b], [ia − b, 0]].
#[inline]
fn i_alpha(a: f64, b: f64) -> (Complex64, Complex64) {
    (Complex64::new(b, a), Complex64::new(-b, a))
}

/// Decomposition of the continuous remainder 𝓡₀ − G₀,₀ − λ(g + G₀) at
/// distance r as s·I + v·α·d̂.
#[inline]
fn remainder_parts(eff: Sign, lambda: f64, g: Complex64, r: f64) -> (Complex64, Complex64) {
    let kappa = lambda.abs();
    let (h0, h1) = hankel1_01(kappa * r);
    let i = Complex64::new(0.0, 1.0);
    let (rr, dr) = {
        let r0 = i * h0 * 0.25;
        let d = -i * h1 * (0.25 * kappa);
        match eff {
            Sign::Plus => (r0, d),
            Sign::Minus => (r0.conj(), d.conj()),
        }
    };
    let s = (rr - g + r.ln() / (2.0 * PI)) * lambda;
    let v = -i * dr - i / (2.0 * PI * r);
    (s, v)
}

/// Weighted matrix of the free resolvent 𝓡₀^sign(λ) at signed real λ
/// (λ = 0 gives G₀,₀), 2N × 2N.
pub fn resolvent_matrix(grid: &Arc<Grid2>, sign: Sign, lambda: f64) -> Mat<Complex64> {
    let tables = grid.near_tables();
    let n = grid.len();
    let nodes = grid.nodes();
    let sw = grid.sqrt_weights();
    let mut m = Mat::<Complex64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let (up, lo) = i_alpha(tables.ax[k], tables.ay[k]);
            m[(2 * i, 2 * j + 1)] = up;
            m[(2 * i + 1, 2 * j)] = lo;
        }
    }
    if lambda == 0.0 {
        return m;
    }
    let eff = effective_sign(sign, lambda);
    let g = g_unchecked(eff, lambda.abs());
    let upper: Vec<Vec<(Complex64, Complex64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    let d = nodes[i] - nodes[j];
                    remainder_parts(eff, lambda, g, d.norm())
                })
                .collect()
        })
        .collect();
    for i in 0..n {
        let diag = (g * sw[i] * sw[i] + tables.alog[i * n + i]) * lambda;
        m[(2 * i, 2 * i)] += diag;
        m[(2 * i + 1, 2 * i + 1)] += diag;
        for (off, &(s, v)) in upper[i].iter().enumerate() {
            let j = i + 1 + off;
            let wij = sw[i] * sw[j];
            let d = nodes[i] - nodes[j];
            let r = d.norm();
            let (c, sn) = (d.x1 / r, d.x2 / r);
            // α·d̂ = [[0, c − i sn], [c + i sn, 0]]
            let a_up = Complex64::new(c, -sn);
            let a_lo = Complex64::new(c, sn);
            for (p, q, sgn) in [(i, j, 1.0), (j, i, -1.0)] {
                let smooth = (g * wij + tables.alog[p * n + q]) * lambda + s * wij;
                m[(2 * p, 2 * q)] += smooth;
                m[(2 * p + 1, 2 * q + 1)] += smooth;
                m[(2 * p, 2 * q + 1)] += v * a_up * (sgn * wij);
                m[(2 * p + 1, 2 * q)] += v * a_lo * (sgn * wij);
            }
        }
    }
    m
}

/// Kernels that can be assembled on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    Expansion(ExpansionTag),
    Resolvent { sign: Sign, lambda: f64 },
    Mu0 { lambda: f64, cutoff: CutoffSpec },
}

impl KernelSpec {
    pub fn tag(&self) -> String {
        match self {
            KernelSpec::Expansion(t) => t.name().to_string(),
            KernelSpec::Resolvent { sign, .. } => format!("R0{sign}"),
            KernelSpec::Mu0 { .. } => "mu0".to_string(),
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            KernelSpec::Expansion(_) => 0.0,
            KernelSpec::Resolvent { lambda, .. } | KernelSpec::Mu0 { lambda, .. } => *lambda,
        }
    }
}

/// Nyström matrix of `kernel` with optional pointwise block weights on
/// either side: entries Lᵢ K(xᵢ, xⱼ) Rⱼ in the weighted form.
pub fn assemble(
    kernel: KernelSpec,
    grid: &Arc<Grid2>,
    left: Option<&[Block]>,
    right: Option<&[Block]>,
) -> Result<BlockOperator> {
    let n = grid.len();
    for w in [left, right].into_iter().flatten() {
        if w.len() != n {
            return Err(Error::Validation("weight length does not match grid".into()));
        }
    }
    if !kernel.lambda().is_finite() {
        return Err(Error::Validation("kernel parameter lambda must be finite".into()));
    }
    let (mat, self_adjoint) = match kernel {
        KernelSpec::Resolvent { sign, lambda } => (resolvent_matrix(grid, sign, lambda), lambda == 0.0),
        KernelSpec::Expansion(ExpansionTag::G00) => (resolvent_matrix(grid, Sign::Plus, 0.0), true),
        KernelSpec::Expansion(ExpansionTag::G10 | ExpansionTag::G0) => {
            let t = grid.near_tables();
            let mut m = Mat::<Complex64>::zeros(2 * n, 2 * n);
            for i in 0..n {
                for j in 0..n {
                    let v = Complex64::new(t.alog[i * n + j], 0.0);
                    m[(2 * i, 2 * j)] = v;
                    m[(2 * i + 1, 2 * j + 1)] = v;
                }
            }
            (m, true)
        }
        KernelSpec::Expansion(tag) => (plain_matrix(grid, |d| tag.eval(d)), true),
        KernelSpec::Mu0 { lambda, cutoff } => {
            let chi = smooth_cutoff(lambda, cutoff);
            (plain_matrix(grid, |d| spectral_jump(lambda, d) * chi), false)
        }
    };
    let op = BlockOperator::from_matrix(grid.clone(), mat, self_adjoint)?;
    Ok(match (left, right) {
        (None, None) => op,
        (l, r) => {
            let id = vec![Block::IDENTITY; n];
            op.sandwich(l.unwrap_or(&id), r.unwrap_or(&id))
        }
    })
}

fn plain_matrix(grid: &Grid2, k: impl Fn(Point2) -> Block + Sync) -> Mat<Complex64> {
    let n = grid.len();
    let nodes = grid.nodes();
    let sw = grid.sqrt_weights();
    let rows: Vec<Vec<Block>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| k(nodes[i] - nodes[j]) * (sw[i] * sw[j])).collect())
        .collect();
    Mat::from_fn(2 * n, 2 * n, |r, c| rows[r / 2][c / 2].0[r % 2][c % 2])
}

/// Resolvent rows at arbitrary evaluation points. The λ-independent local
/// corrections are computed once; `resolvent` then returns the (2P × 2N)
/// matrix acting on field coefficients, ∫𝓡₀(p, z) f(z) dz ≈ (row · c)ₚ.
#[derive(Debug, Clone)]
pub struct EvaluationRows {
    grid: Arc<Grid2>,
    points: Vec<Point2>,
    near: Vec<Option<SingularRow>>,
}

impl EvaluationRows {
    pub fn new(grid: &Arc<Grid2>, points: &[Point2]) -> Self {
        let near = points
            .par_iter()
            .map(|&p| needs_correction(grid, p).then(|| singular_row(grid, p)))
            .collect();
        Self { grid: grid.clone(), points: points.to_vec(), near }
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn resolvent(&self, sign: Sign, lambda: f64) -> Mat<Complex64> {
        let grid = &self.grid;
        let n = grid.len();
        let nodes = grid.nodes();
        let w = grid.weights();
        let sw = grid.sqrt_weights();
        let eff = effective_sign(sign, lambda);
        let g = if lambda != 0.0 { g_unchecked(eff, lambda.abs()) } else { Complex64::default() };
        let rows: Vec<Vec<Block>> = self
            .points
            .par_iter()
            .zip(&self.near)
            .map(|(&p, near)| {
                (0..n)
                    .map(|j| {
                        let d = p - nodes[j];
                        let c = match near {
                            None => resolvent_kernel(sign, lambda, d) * w[j],
                            Some(row) => {
                                let (up, lo) = i_alpha(row.gx[j], row.gy[j]);
                                let mut b = Block::new(Complex64::default(), up, lo, Complex64::default());
                                if lambda != 0.0 {
                                    let smooth = (g * w[j] + row.glog[j]) * lambda;
                                    b += Block::scalar(smooth);
                                    let r = d.norm();
                                    if r > 0.0 {
                                        let (s, v) = remainder_parts(eff, lambda, g, r);
                                        let a = crate::freeops::alpha_dot(d.x1 / r, d.x2 / r);
                                        b += (Block::scalar(s) + a.scale(v)) * w[j];
                                    }
                                }
                                b
                            }
                        };
                        c * (1.0 / sw[j])
                    })
                    .collect()
            })
            .collect();
        Mat::from_fn(2 * self.points.len(), 2 * n, |r, c| rows[r / 2][c / 2].0[r % 2][c % 2])
    }
}

/// G₀,₀ evaluated at arbitrary points, as rows acting on field coefficients.
pub fn g00_rows(grid: &Arc<Grid2>, points: &[Point2]) -> Mat<Complex64> {
    EvaluationRows::new(grid, points).resolvent(Sign::Plus, 0.0)
}
