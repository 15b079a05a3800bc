//! Low-energy evolution e^{−itH}χ(H)(x, y) by Stone's formula,
//! K_t = (1/2πi)∫e^{−itλ}χ(λ)[𝓡_V⁺ − 𝓡_V⁻](λ)(x, y)dλ, with the perturbed
//! resolvent from the symmetric resolvent identity
//! 𝓡_V = 𝓡₀ − 𝓡₀V𝓡₀ + 𝓡₀V𝓡₀V𝓡₀ − 𝓡₀V𝓡₀v*M⁻¹v𝓡₀V𝓡₀.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use super::{EvolutionKernel, FiniteRankTerm, LambdaContour, Provenance};
use crate::discretize::{g00_rows, gauss_legendre, resolvent_matrix, EvaluationRows, KernelSamples};
use crate::error::{Error, Result};
use crate::freeops::{spectral_jump, CutoffSpec, Point2};
use crate::linalg::{self, CMat};
use crate::specfun::Sign;
use crate::threshold::{g_eff_log, ThresholdAnalysis};

const SMALL_ORDER: usize = 24;

/// Free spectral jump at all (x, y) pairs, as a 2|X| × 2|Y| matrix.
fn jump_matrix(lambda: f64, xs: &[Point2], ys: &[Point2]) -> CMat {
    let mut m = Mat::zeros(2 * xs.len(), 2 * ys.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let b = spectral_jump(lambda, x - y);
            for a in 0..2 {
                for c in 0..2 {
                    m[(2 * i + a, 2 * j + c)] = b.0[a][c];
                }
            }
        }
    }
    m
}

/// Pieces of 𝓡_V±(λ) − 𝓡₀±(λ) at one signed λ.
struct Corrections {
    /// −Lx V W (full identity)
    full: [CMat; 2],
    /// −Lx V (Ry − A V Ry) (first three terms)
    born: [CMat; 2],
}

/// Shared evaluation data: the threshold analysis plus resolvent rows at
/// the row and column point sets.
struct Evaluator {
    analysis: Arc<ThresholdAnalysis>,
    rows_x: EvaluationRows,
    rows_y: EvaluationRows,
}

impl Evaluator {
    fn new(analysis: Arc<ThresholdAnalysis>, xs: &[Point2], ys: &[Point2]) -> Self {
        let grid = analysis.grid().clone();
        Self { rows_x: EvaluationRows::new(&grid, xs), rows_y: EvaluationRows::new(&grid, ys), analysis }
    }

    fn corrections(&self, lambda: f64) -> Result<Corrections> {
        let an = &*self.analysis;
        let grid = an.grid();
        let fp = an.factored();
        let a_plus = resolvent_matrix(grid, Sign::Plus, lambda);
        let a_minus = a_plus.adjoint().to_owned();
        let va = fp.v_adjoint();
        let mut m_plus = linalg::block_diag_right(linalg::block_diag_left(&fp.v, a_plus.as_ref()).as_ref(), &va);
        for (k, u) in fp.u.iter().enumerate() {
            m_plus[(2 * k, 2 * k)] += u[0];
            m_plus[(2 * k + 1, 2 * k + 1)] += u[1];
        }
        let lu = m_plus.partial_piv_lu();
        let mut full = Vec::with_capacity(2);
        let mut born = Vec::with_capacity(2);
        for (sign, a) in [(Sign::Plus, &a_plus), (Sign::Minus, &a_minus)] {
            let lx = self.rows_x.resolvent(sign, lambda);
            let ry = self.rows_y.resolvent(sign.flip(), lambda).adjoint().to_owned();
            let b = linalg::block_diag_left(&fp.potential, ry.as_ref());
            let c = a * &b;
            let e = linalg::block_diag_left(&fp.v, c.as_ref());
            let f = match sign {
                Sign::Plus => lu.solve(&e),
                Sign::Minus => lu.solve_adjoint(&e),
            };
            let g = a * linalg::block_diag_left(&va, f.as_ref());
            let three = &ry - &c;
            let w = &three + &g;
            let lxv = linalg::block_diag_right(lx.as_ref(), &fp.potential);
            let mut pf = &lxv * &w;
            pf *= faer::Scale(Complex64::new(-1.0, 0.0));
            let mut pb = &lxv * &three;
            pb *= faer::Scale(Complex64::new(-1.0, 0.0));
            full.push(pf);
            born.push(pb);
        }
        let check = |v: &CMat| (0..v.ncols()).all(|j| (0..v.nrows()).all(|i| v[(i, j)].is_finite()));
        if !full.iter().all(check) {
            return Err(Error::Singular(format!("M(lambda) solve produced non-finite values at lambda = {lambda:e}")));
        }
        let mut fi = full.into_iter();
        let mut bi = born.into_iter();
        Ok(Corrections {
            full: [fi.next().unwrap(), fi.next().unwrap()],
            born: [bi.next().unwrap(), bi.next().unwrap()],
        })
    }
}

/// 𝓡_V±(λ) − 𝓡₀±(λ) at the point pairs, 2|X| × 2|Y|.
pub fn resolvent_correction(
    analysis: &Arc<ThresholdAnalysis>,
    sign: Sign,
    lambda: f64,
    xs: &[Point2],
    ys: &[Point2],
) -> Result<CMat> {
    check_lambda(lambda)?;
    let ev = Evaluator::new(analysis.clone(), xs, ys);
    let c = ev.corrections(lambda)?;
    let [p, m] = c.full;
    Ok(match sign {
        Sign::Plus => p,
        Sign::Minus => m,
    })
}

/// [𝓡_V⁺ − 𝓡_V⁻](λ)(x, y) at the point pairs (no cutoff applied).
pub fn spectral_density(
    analysis: &Arc<ThresholdAnalysis>,
    lambda: f64,
    xs: &[Point2],
    ys: &[Point2],
) -> Result<KernelSamples> {
    check_lambda(lambda)?;
    let ev = Evaluator::new(analysis.clone(), xs, ys);
    let c = ev.corrections(lambda)?;
    let [p, m] = c.full;
    let d = jump_matrix(lambda, xs, ys) + p - m;
    Ok(KernelSamples::from_matrix(xs.to_vec(), ys.to_vec(), d.as_ref()))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be finite and nonzero, got {lambda}")));
    }
    Ok(())
}

/// Outer factors of F_t: G₀,₀VG₀,₀v*Φ at the row points (2|X| × r) and its
/// adjoint counterpart at the column points (r × 2|Y|).
fn outer_factors(analysis: &ThresholdAnalysis, xs: &[Point2], ys: &[Point2]) -> (CMat, CMat) {
    let grid = analysis.grid();
    let fp = analysis.factored();
    let vphi = linalg::block_diag_left(&fp.v_adjoint(), analysis.basis().as_ref());
    let g = analysis.g00_matrix() * &vphi;
    let vg = linalg::block_diag_left(&fp.potential, g.as_ref());
    let ox = g00_rows(grid, xs) * &vg;
    let oy = (g00_rows(grid, ys) * &vg).adjoint().to_owned();
    (ox, oy)
}

/// (A⁺(λ)⁻¹ − A⁻(λ)⁻¹)/λ in S₁ coordinates.
fn ft_core(analysis: &ThresholdAnalysis, lambda: f64) -> Result<CMat> {
    let p = analysis.invert_a(Sign::Plus, lambda)?;
    let m = analysis.invert_a(Sign::Minus, lambda)?;
    let mut d = &p - &m;
    d *= faer::Scale(Complex64::new(1.0 / lambda, 0.0));
    Ok(d)
}

/// ∫_{|λ|<λ_min} (A⁺⁻¹ − A⁻⁻¹)/λ dλ = 2∫_{u₀}^∞ (A⁺⁻¹ − A⁻⁻¹)(e^{−u})du with
/// u₀ = −log λ_min, evaluated in w = 1/u where the integrand is smooth.
fn ft_small_piece(analysis: &ThresholdAnalysis, lambda_min: f64) -> Result<CMat> {
    let r = analysis.rank_s1();
    let u0 = -lambda_min.ln();
    let top = 1.0 / u0;
    let (x, w) = gauss_legendre(SMALL_ORDER);
    let mut acc = Mat::<Complex64>::zeros(r, r);
    for (xi, wi) in x.iter().zip(&w) {
        let ww = 0.5 * top * (xi + 1.0);
        let u = 1.0 / ww;
        let lam = (-u).exp();
        let p = analysis.invert_a_g(g_eff_log(Sign::Plus, false, u), lam)?;
        let m = analysis.invert_a_g(g_eff_log(Sign::Minus, false, u), lam)?;
        let scale = 2.0 * 0.5 * top * wi / (ww * ww);
        acc += (&p - &m) * faer::Scale(Complex64::new(scale, 0.0));
    }
    Ok(acc)
}

/// Per-node data of a Stone evaluation over a fixed contour.
#[derive(Debug, Clone)]
pub struct LowEnergyPropagator {
    analysis: Arc<ThresholdAnalysis>,
    cutoff: CutoffSpec,
    contour: LambdaContour,
    xs: Vec<Point2>,
    ys: Vec<Point2>,
    reach: f64,
    /// χ(λₖ)·density at each node.
    density: Vec<CMat>,
    born: Vec<CMat>,
    ft: Option<FtData>,
}

#[derive(Debug, Clone)]
struct FtData {
    ox: CMat,
    oy: CMat,
    /// χ(λₖ)·(A⁺⁻¹ − A⁻⁻¹)/λ at each node
    cores: Vec<CMat>,
    small: CMat,
}

impl LowEnergyPropagator {
    /// Evaluate the density at every contour node. `xs` are the row
    /// points, `ys` the column points of all kernels produced.
    pub fn new(
        analysis: Arc<ThresholdAnalysis>,
        cutoff: CutoffSpec,
        contour: LambdaContour,
        xs: &[Point2],
        ys: &[Point2],
    ) -> Result<Self> {
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::Validation("evaluation point sets must be non-empty".into()));
        }
        let spec = analysis.factored().spec;
        let rv = spec.support_radius(1e-8).min(std::f64::consts::SQRT_2 * analysis.grid().half_width());
        let xmax = xs.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let ymax = ys.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let reach = xmax + ymax + 2.0 * rv;
        contour.check_rate(reach)?;
        let ev = Evaluator::new(analysis.clone(), xs, ys);
        let mut density = Vec::with_capacity(contour.len());
        let mut born = Vec::with_capacity(contour.len());
        for &l in contour.nodes() {
            let chi = Complex64::new(cutoff.chi(l), 0.0);
            let c = ev.corrections(l)?;
            let jump = jump_matrix(l, xs, ys);
            let [fp, fm] = c.full;
            let [bp, bm] = c.born;
            let mut d = &jump + fp - fm;
            d *= faer::Scale(chi);
            let mut b = jump + bp - bm;
            b *= faer::Scale(chi);
            density.push(d);
            born.push(b);
        }
        let ft = if analysis.rank_q() > 0 {
            let (ox, oy) = outer_factors(&analysis, xs, ys);
            let mut cores = Vec::with_capacity(contour.len());
            for &l in contour.nodes() {
                let mut c = ft_core(&analysis, l)?;
                c *= faer::Scale(Complex64::new(cutoff.chi(l), 0.0));
                cores.push(c);
            }
            let small = ft_small_piece(&analysis, contour.lambda_min())?;
            Some(FtData { ox, oy, cores, small })
        } else {
            None
        };
        Ok(Self { analysis, cutoff, contour, xs: xs.to_vec(), ys: ys.to_vec(), reach, density, born, ft })
    }

    pub fn contour(&self) -> &LambdaContour {
        &self.contour
    }

    pub fn cutoff(&self) -> CutoffSpec {
        self.cutoff
    }

    pub fn analysis(&self) -> &Arc<ThresholdAnalysis> {
        &self.analysis
    }

    pub fn rows(&self) -> &[Point2] {
        &self.xs
    }

    pub fn cols(&self) -> &[Point2] {
        &self.ys
    }

    /// Largest |t| this contour resolves for the stored point sets.
    pub fn t_max(&self) -> f64 {
        self.contour.rate() - self.reach
    }

    fn check_t(&self, t: f64) -> Result<()> {
        self.contour.check_rate(t.abs() + self.reach)
    }

    fn sum(&self, t: f64, data: &[CMat]) -> CMat {
        let pref = Complex64::new(0.0, -1.0 / (2.0 * PI));
        let mut acc = Mat::<Complex64>::zeros(data[0].nrows(), data[0].ncols());
        for ((&l, &w), d) in self.contour.nodes().iter().zip(self.contour.weights()).zip(data) {
            let z = Complex64::from_polar(w, -t * l) * pref;
            acc += d * faer::Scale(z);
        }
        acc
    }

    /// (1/2πi)·(−O_X C O_Y) for C = Σ wₖe^{−itλₖ}coreₖ (+ the small piece).
    fn ft_matrix(&self, t: f64, with_small: bool) -> Option<CMat> {
        let ft = self.ft.as_ref()?;
        let pref = Complex64::new(0.0, 1.0 / (2.0 * PI));
        let r = ft.small.nrows();
        let mut c = Mat::<Complex64>::zeros(r, r);
        for ((&l, &w), core) in self.contour.nodes().iter().zip(self.contour.weights()).zip(&ft.cores) {
            c += core * faer::Scale(Complex64::from_polar(w, -t * l));
        }
        if with_small {
            c += &ft.small;
        }
        c *= faer::Scale(pref);
        Some(&ft.ox * &c * &ft.oy)
    }

    fn kernel(&self, t: f64, m: CMat, provenance: Provenance) -> EvolutionKernel {
        EvolutionKernel {
            t,
            provenance,
            samples: KernelSamples::from_matrix(self.xs.clone(), self.ys.clone(), m.as_ref()),
        }
    }

    /// e^{−itH}χ(H)P_ac(x, y).
    pub fn evolve(&self, t: f64) -> Result<EvolutionKernel> {
        self.check_t(t)?;
        let mut k = self.sum(t, &self.density);
        if let Some(ft) = &self.ft {
            // |λ| < λ_min: the density there is the leading finite-rank term
            let pref = Complex64::new(0.0, 1.0 / (2.0 * PI));
            k += &ft.ox * (&ft.small * faer::Scale(pref)) * &ft.oy;
        }
        Ok(self.kernel(t, k, Provenance::StoneLowEnergy))
    }

    /// The first three terms of the resolvent identity, integrated.
    pub fn evolve_born(&self, t: f64) -> Result<EvolutionKernel> {
        self.check_t(t)?;
        Ok(self.kernel(t, self.sum(t, &self.born), Provenance::BornThreeTerm))
    }

    /// F_t on this contour (zero without a p-wave resonance).
    pub fn finite_rank_term(&self, t: f64) -> Result<FiniteRankTerm> {
        self.check_t(t)?;
        let m = self
            .ft_matrix(t, true)
            .unwrap_or_else(|| Mat::zeros(2 * self.xs.len(), 2 * self.ys.len()));
        Ok(FiniteRankTerm::new(t, &self.xs, &self.ys, m, self.analysis.rank_s1()))
    }

    /// K_t − F_t. The small-|λ| pieces cancel exactly.
    pub fn evolve_minus_ft(&self, t: f64) -> Result<EvolutionKernel> {
        self.check_t(t)?;
        let mut k = self.sum(t, &self.density);
        if let Some(f) = self.ft_matrix(t, false) {
            k -= f;
        }
        Ok(self.kernel(t, k, Provenance::StoneMinusFt))
    }
}

/// F_t at the given points with its own contour; the inner factor only
/// involves r × r matrices so large t is cheap.
pub fn compute_ft(
    analysis: &Arc<ThresholdAnalysis>,
    t: f64,
    xs: &[Point2],
    ys: &[Point2],
    cutoff: CutoffSpec,
    contour: &LambdaContour,
) -> Result<FiniteRankTerm> {
    if analysis.rank_q() == 0 {
        return Ok(FiniteRankTerm::new(t, xs, ys, Mat::zeros(2 * xs.len(), 2 * ys.len()), analysis.rank_s1()));
    }
    contour.check_rate(t.abs())?;
    let (ox, oy) = outer_factors(analysis, xs, ys);
    let r = analysis.rank_s1();
    let mut c = Mat::<Complex64>::zeros(r, r);
    for (&l, &w) in contour.nodes().iter().zip(contour.weights()) {
        let chi = cutoff.chi(l);
        if chi == 0.0 {
            continue;
        }
        c += ft_core(analysis, l)? * faer::Scale(Complex64::from_polar(w * chi, -t * l));
    }
    c += ft_small_piece(analysis, contour.lambda_min())?;
    c *= faer::Scale(Complex64::new(0.0, 1.0 / (2.0 * PI)));
    Ok(FiniteRankTerm::new(t, xs, ys, &ox * &c * &oy, r))
}

/// One-shot e^{−itH}χ(H)P_ac(x, y); builds the node data for a single t.
pub fn evolve_low(
    t: f64,
    analysis: &Arc<ThresholdAnalysis>,
    cutoff: CutoffSpec,
    contour: LambdaContour,
    xs: &[Point2],
    ys: &[Point2],
) -> Result<EvolutionKernel> {
    LowEnergyPropagator::new(analysis.clone(), cutoff, contour, xs, ys)?.evolve(t)
}
