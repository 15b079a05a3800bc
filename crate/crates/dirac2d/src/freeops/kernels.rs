use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{alpha_dot, smooth_cutoff, Block, CutoffSpec, Point2};
use crate::error::{Error, Result};
use crate::specfun::{bessel_j01, g_unchecked, hankel1_01, Sign};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Branch of the Schrödinger resolvent used by the Dirac boundary value at
/// signed energy λ: for λ < 0 the outgoing Dirac resolvent is built on the
/// incoming Schrödinger kernel.
#[inline]
pub(crate) fn effective_sign(sign: Sign, lambda: f64) -> Sign {
    if lambda >= 0.0 {
        sign
    } else {
        sign.flip()
    }
}

/// (R, ∂R/∂r) for R = (±i/4)H₀^{(±)}(κr), κ > 0, r > 0.
#[inline]
fn schrodinger_pair(eff: Sign, kappa: f64, r: f64) -> (Complex64, Complex64) {
    let (h0, h1) = hankel1_01(kappa * r);
    let r0 = I * h0 * 0.25;
    let dr = -I * h1 * (0.25 * kappa);
    match eff {
        Sign::Plus => (r0, dr),
        Sign::Minus => (r0.conj(), dr.conj()),
    }
}

/// G₀,₀(d) = iα·d/(2π|d|²).
#[inline]
pub(crate) fn g00(d: Point2, r2: f64) -> Block {
    let s = 1.0 / (2.0 * PI * r2);
    alpha_dot(d.x1 * s, d.x2 * s).scale(I)
}

/// Boundary value 𝓡₀^sign(λ)(x, y) of the free Dirac resolvent at signed
/// real λ, as a function of d = x − y ≠ 0. At λ = 0 this is G₀,₀.
pub fn resolvent_kernel(sign: Sign, lambda: f64, d: Point2) -> Block {
    let r2 = d.x1 * d.x1 + d.x2 * d.x2;
    if lambda == 0.0 {
        return g00(d, r2);
    }
    let r = r2.sqrt();
    let kappa = lambda.abs();
    let (r0, dr) = schrodinger_pair(effective_sign(sign, lambda), kappa, r);
    let u = alpha_dot(d.x1 / r, d.x2 / r);
    Block::scalar(r0 * lambda) + u.scale(-I * dr)
}

/// 𝓡₀^sign(λ) − G₀,₀ − λ(g_eff(|λ|) + G₀)·I: the part of the free resolvent
/// that is continuous across the diagonal (it vanishes at d = 0).
pub fn resolvent_remainder(sign: Sign, lambda: f64, d: Point2) -> Block {
    let r2 = d.x1 * d.x1 + d.x2 * d.x2;
    if lambda == 0.0 || r2 == 0.0 {
        return Block::ZERO;
    }
    let kappa = lambda.abs();
    let g = g_unchecked(effective_sign(sign, lambda), kappa);
    let log_term = -(r2.ln() * 0.5) / (2.0 * PI);
    resolvent_kernel(sign, lambda, d) - g00(d, r2) - Block::scalar((g + log_term) * lambda)
}

fn check_pair(x: Point2, y: Point2) -> Result<Point2> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::Validation("non-finite point".into()));
    }
    if x == y {
        return Err(Error::SingularPoint);
    }
    Ok(x - y)
}

fn check_positive(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be finite and > 0, got {lambda}")));
    }
    Ok(())
}

/// R₀^±(λ²)(x, y) = (±i/4)H₀^{(±)}(λ|x − y|).
pub fn schrodinger_resolvent(sign: Sign, lambda: f64, x: Point2, y: Point2) -> Result<Complex64> {
    check_positive(lambda)?;
    let d = check_pair(x, y)?;
    Ok(schrodinger_pair(sign, lambda, d.norm()).0)
}

/// 𝓡₀^±(λ)(x, y) = (−iα·∇ₓ + λ)R₀^±(λ²)(x, y) for λ > 0.
pub fn dirac_resolvent(sign: Sign, lambda: f64, x: Point2, y: Point2) -> Result<Block> {
    check_positive(lambda)?;
    let d = check_pair(x, y)?;
    Ok(resolvent_kernel(sign, lambda, d))
}

/// [𝓡₀⁺ − 𝓡₀⁻](λ) at d = x − y in closed form:
/// sgn(λ)[λ(i/2)J₀(|λ|r)·I − (|λ|/2)J₁(|λ|r)·α·d̂]. Smooth across d = 0.
pub fn spectral_jump(lambda: f64, d: Point2) -> Block {
    if lambda == 0.0 {
        return Block::ZERO;
    }
    let kappa = lambda.abs();
    let r = d.norm();
    if r == 0.0 {
        return Block::scalar(Complex64::new(0.0, 0.5 * kappa));
    }
    let (j0, j1) = bessel_j01(kappa * r);
    let sgn = lambda.signum();
    let c = -0.5 * kappa * j1 * sgn / r;
    Block::scalar(Complex64::new(0.0, 0.5 * kappa * j0)) + alpha_dot(c * d.x1, c * d.x2)
}

/// μ₀(λ)(x, y) = χ(λ)[𝓡₀⁺ − 𝓡₀⁻](λ)(x, y).
pub fn mu0(lambda: f64, x: Point2, y: Point2, cutoff: CutoffSpec) -> Block {
    let chi = smooth_cutoff(lambda, cutoff);
    if chi == 0.0 {
        return Block::ZERO;
    }
    spectral_jump(lambda, x - y) * chi
}

/// Kernels of the low-energy expansion of the free resolvent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExpansionTag {
    G00,
    G10,
    G11,
    G21,
    G20,
    G0,
    G1,
    G2,
}

impl ExpansionTag {
    pub const ALL: [ExpansionTag; 8] = [
        ExpansionTag::G00,
        ExpansionTag::G10,
        ExpansionTag::G11,
        ExpansionTag::G21,
        ExpansionTag::G20,
        ExpansionTag::G0,
        ExpansionTag::G1,
        ExpansionTag::G2,
    ];

    /// Kernels that blow up at coincident points.
    pub fn is_singular(self) -> bool {
        matches!(self, ExpansionTag::G00 | ExpansionTag::G10 | ExpansionTag::G0)
    }

    pub fn name(self) -> &'static str {
        match self {
            ExpansionTag::G00 => "G00",
            ExpansionTag::G10 => "G10",
            ExpansionTag::G11 => "G11",
            ExpansionTag::G21 => "G21",
            ExpansionTag::G20 => "G20",
            ExpansionTag::G0 => "G0",
            ExpansionTag::G1 => "G1",
            ExpansionTag::G2 => "G2",
        }
    }

    /// Value at d = x − y, without the coincidence check. Non-singular
    /// kernels take their continuous limit at d = 0.
    pub(crate) fn eval(self, d: Point2) -> Block {
        let r2 = d.x1 * d.x1 + d.x2 * d.x2;
        // r² log r, continuous at 0
        let r2logr = if r2 > 0.0 { 0.5 * r2 * r2.ln() } else { 0.0 };
        match self {
            ExpansionTag::G00 => g00(d, r2),
            ExpansionTag::G10 | ExpansionTag::G0 => Block::scalar((-(0.25 / PI) * r2.ln()).into()),
            ExpansionTag::G11 => Block::IDENTITY,
            ExpansionTag::G21 => alpha_dot(d.x1, d.x2).scale(Complex64::new(0.0, -2.0)),
            ExpansionTag::G20 => {
                // ∇(r² log r) = (x − y)(2 log r + 1)
                let f = if r2 > 0.0 { r2.ln() + 1.0 } else { 0.0 };
                alpha_dot(d.x1 * f, d.x2 * f).scale(Complex64::new(0.0, -1.0 / (8.0 * PI)))
            }
            ExpansionTag::G1 => Block::scalar(r2.into()),
            ExpansionTag::G2 => Block::scalar((r2logr / (8.0 * PI)).into()),
        }
    }
}

impl std::fmt::Display for ExpansionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn expansion_kernel(tag: ExpansionTag, x: Point2, y: Point2) -> Result<Block> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::Validation("non-finite point".into()));
    }
    if tag.is_singular() && x == y {
        return Err(Error::SingularPoint);
    }
    Ok(tag.eval(x - y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g00_example() {
        let b = expansion_kernel(ExpansionTag::G00, Point2::new(1.0, 0.0), Point2::ORIGIN).unwrap();
        let want = Block::ALPHA1.scale(Complex64::new(0.0, 1.0 / (2.0 * PI)));
        assert!((b - want).max_abs() < 1e-16);
    }

    #[test]
    fn remainder_vanishes_at_small_lambda() {
        let d = Point2::new(0.3, -0.4);
        for sign in Sign::BOTH {
            for lambda in [1e-4, -1e-4] {
                assert!(resolvent_remainder(sign, lambda, d).max_abs() < 1e-7);
            }
        }
    }

    #[test]
    fn jump_matches_difference_of_boundary_values() {
        let d = Point2::new(1.3, 0.7);
        for lambda in [0.4, -0.4, 3.0, -2.5] {
            let diff = resolvent_kernel(Sign::Plus, lambda, d) - resolvent_kernel(Sign::Minus, lambda, d);
            assert!((diff - spectral_jump(lambda, d)).max_abs() < 1e-14);
        }
    }
}
