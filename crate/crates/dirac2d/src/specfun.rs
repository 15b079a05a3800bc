//! Bessel and Hankel functions of order 0 and 1, and the scalar
//! coefficients g± and g₁± of the low-energy resolvent expansion.
//!
//! J0, J1, Y0, Y1 use the Cephes rational approximations: a rational form
//! in x² on [0, 5] and the Hankel asymptotic form with rational P, Q
//! corrections beyond.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SQRT_FRAC_2_PI: f64 = 0.797_884_560_802_865_4;

/// Outgoing (+) or incoming (−) boundary value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

#[inline]
fn polevl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Horner evaluation with an implicit leading coefficient of one.
#[inline]
fn p1evl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(1.0, |acc, &c| acc * x + c)
}

mod order0 {
    pub const DR1: f64 = 5.783185962946784;
    pub const DR2: f64 = 30.471262343662087;
    pub const RP: [f64; 4] = [
        -4.794432209782018e9,
        1.9561749194655657e12,
        -2.4924834436096772e14,
        9.708622510473064e15,
    ];
    pub const RQ: [f64; 8] = [
        4.99563147152651e2,
        1.737854016763747e5,
        4.844096583399621e7,
        1.1185553704535683e10,
        2.112775201154892e12,
        3.1051822985742256e14,
        3.1812195594320496e16,
        1.7108629408104315e18,
    ];
    pub const PP: [f64; 7] = [
        7.969367292973471e-4,
        8.283523921074408e-2,
        1.239533716464143,
        5.447250030587687,
        8.74716500199817,
        5.303240382353949,
        1.0,
    ];
    pub const PQ: [f64; 7] = [
        9.244088105588637e-4,
        8.562884743544745e-2,
        1.2535274390105895,
        5.470977403304171,
        8.761908832370695,
        5.306052882353947,
        1.0,
    ];
    pub const QP: [f64; 8] = [
        -1.1366383889846916e-2,
        -1.2825271867050931,
        -1.9553954425773597e1,
        -9.320601521237683e1,
        -1.7768116798048806e2,
        -1.4707750515495118e2,
        -5.141053267665993e1,
        -6.050143506007285,
    ];
    pub const QQ: [f64; 7] = [
        6.43178256118178e1,
        8.564300259769806e2,
        3.8824018360540163e3,
        7.240467741956525e3,
        5.930727011873169e3,
        2.0620933166032783e3,
        2.420057402402914e2,
    ];
    pub const YP: [f64; 8] = [
        1.5592436785523574e4,
        -1.466392959039716e7,
        5.435264770518765e9,
        -9.821360657179115e11,
        8.75906394395367e13,
        -3.466283033847297e15,
        4.4273326857256984e16,
        -1.8495080043698668e16,
    ];
    pub const YQ: [f64; 7] = [
        1.0412835366425984e3,
        6.26107330137135e5,
        2.6891963339381415e8,
        8.64002487103935e10,
        2.0297961275010555e13,
        3.1715775284297505e15,
        2.5059625617265306e17,
    ];
}

mod order1 {
    pub const Z1: f64 = 1.4681970642123893e1;
    pub const Z2: f64 = 4.92184563216946e1;
    pub const RP: [f64; 4] = [
        -8.999712257055594e8,
        4.5222829799819403e11,
        -7.274942452218183e13,
        3.682957328638529e15,
    ];
    pub const RQ: [f64; 8] = [
        6.208364781180543e2,
        2.5698725675774884e5,
        8.351467914319493e7,
        2.215115954797925e10,
        4.749141220799914e12,
        7.843696078762359e14,
        8.952223361846274e16,
        5.322786203326801e18,
    ];
    pub const PP: [f64; 7] = [
        7.621256162081731e-4,
        7.313970569409176e-2,
        1.1271960812968493,
        5.112079511468076,
        8.424045901417724,
        5.214515986823615,
        1.0,
    ];
    pub const PQ: [f64; 7] = [
        5.713231280725487e-4,
        6.884559087544954e-2,
        1.105142326340617,
        5.073863861286015,
        8.399855543276042,
        5.209828486823619,
        1.0,
    ];
    pub const QP: [f64; 8] = [
        5.108625947501766e-2,
        4.982138729512334,
        7.582382841325453e1,
        3.667796093601508e2,
        7.108563049989261e2,
        5.974896124006136e2,
        2.1168875710057213e2,
        2.5207020585802372e1,
    ];
    pub const QQ: [f64; 7] = [
        7.423732770356752e1,
        1.0564488603826283e3,
        4.986410583376536e3,
        9.562318924047562e3,
        7.997041604473507e3,
        2.8261927851763908e3,
        3.360936078106983e2,
    ];
    pub const YP: [f64; 6] = [
        1.2632047479017804e9,
        -6.473558763791603e11,
        1.1450951154182373e14,
        -8.127702555013251e15,
        2.024394757135949e17,
        -7.788771962659501e17,
    ];
    pub const YQ: [f64; 8] = [
        5.943015923461282e2,
        2.3556409294306856e5,
        7.348119444597217e7,
        1.8760131610870617e10,
        3.8823127749623857e12,
        6.205577271469538e14,
        6.871410873553005e16,
        3.9727060811656064e18,
    ];
}

/// J₀(x) for finite x (even extension to x < 0).
pub fn j0(x: f64) -> f64 {
    use order0::*;
    let x = x.abs();
    if x <= 5.0 {
        let z = x * x;
        if x < 1e-5 {
            return 1.0 - z / 4.0;
        }
        return (z - DR1) * (z - DR2) * polevl(z, &RP) / p1evl(z, &RQ);
    }
    let (p, q) = asymptotic0(x);
    let w = 5.0 / x;
    let (s, c) = (x - FRAC_PI_4).sin_cos();
    (p * c - w * q * s) * SQRT_FRAC_2_PI / x.sqrt()
}

/// J₁(x) for finite x (odd extension to x < 0).
pub fn j1(x: f64) -> f64 {
    use order1::*;
    if x < 0.0 {
        return -j1(-x);
    }
    if x <= 5.0 {
        let z = x * x;
        return x * (z - Z1) * (z - Z2) * polevl(z, &RP) / p1evl(z, &RQ);
    }
    let (p, q) = asymptotic1(x);
    let w = 5.0 / x;
    let (s, c) = (x - 3.0 * FRAC_PI_4).sin_cos();
    (p * c - w * q * s) * SQRT_FRAC_2_PI / x.sqrt()
}

/// Y₀(x) for x > 0; −∞ at 0 and NaN for negative x.
pub fn y0(x: f64) -> f64 {
    use order0::*;
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x < 0.0 {
        return f64::NAN;
    }
    if x <= 5.0 {
        let z = x * x;
        return polevl(z, &YP) / p1evl(z, &YQ) + 2.0 / PI * x.ln() * j0(x);
    }
    let (p, q) = asymptotic0(x);
    let w = 5.0 / x;
    let (s, c) = (x - FRAC_PI_4).sin_cos();
    (p * s + w * q * c) * SQRT_FRAC_2_PI / x.sqrt()
}

/// Y₁(x) for x > 0; −∞ at 0 and NaN for negative x.
pub fn y1(x: f64) -> f64 {
    use order1::*;
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x < 0.0 {
        return f64::NAN;
    }
    if x <= 5.0 {
        let z = x * x;
        return x * polevl(z, &YP) / p1evl(z, &YQ) + 2.0 / PI * (j1(x) * x.ln() - 1.0 / x);
    }
    let (p, q) = asymptotic1(x);
    let w = 5.0 / x;
    let (s, c) = (x - 3.0 * FRAC_PI_4).sin_cos();
    (p * s + w * q * c) * SQRT_FRAC_2_PI / x.sqrt()
}

#[inline]
fn asymptotic0(x: f64) -> (f64, f64) {
    use order0::*;
    let z = 25.0 / (x * x);
    (polevl(z, &PP) / polevl(z, &PQ), polevl(z, &QP) / p1evl(z, &QQ))
}

#[inline]
fn asymptotic1(x: f64) -> (f64, f64) {
    use order1::*;
    let z = 25.0 / (x * x);
    (polevl(z, &PP) / polevl(z, &PQ), polevl(z, &QP) / p1evl(z, &QQ))
}

/// H₀⁽¹⁾(x) and H₁⁽¹⁾(x) together, for x > 0. Shares the asymptotic
/// P, Q evaluations between J and Y; this is the hot path of kernel assembly.
#[inline]
pub fn hankel1_01(x: f64) -> (Complex64, Complex64) {
    debug_assert!(x > 0.0);
    if x <= 5.0 {
        return (Complex64::new(j0(x), y0(x)), Complex64::new(j1(x), y1(x)));
    }
    let (p0, q0) = asymptotic0(x);
    let (p1, q1) = asymptotic1(x);
    let w = 5.0 / x;
    let amp = SQRT_FRAC_2_PI / x.sqrt();
    // H_n = amp (p + i w q) e^{i (x - (2n+1) pi/4)}
    let e0 = Complex64::from_polar(amp, x - FRAC_PI_4);
    let e1 = Complex64::from_polar(amp, x - 3.0 * FRAC_PI_4);
    (e0 * Complex64::new(p0, w * q0), e1 * Complex64::new(p1, w * q1))
}

/// J₀(x) and J₁(x) together.
#[inline]
pub fn bessel_j01(x: f64) -> (f64, f64) {
    if x <= 5.0 {
        return (j0(x), j1(x));
    }
    let (p0, q0) = asymptotic0(x);
    let (p1, q1) = asymptotic1(x);
    let w = 5.0 / x;
    let amp = SQRT_FRAC_2_PI / x.sqrt();
    let (s0, c0) = (x - FRAC_PI_4).sin_cos();
    // cos(x - 3pi/4) = sin(x - pi/4), sin(x - 3pi/4) = -cos(x - pi/4)
    (amp * (p0 * c0 - w * q0 * s0), amp * (p1 * s0 + w * q1 * c0))
}

fn check_order(order: u32) -> Result<()> {
    if order > 1 {
        return Err(Error::Domain(format!("Bessel order {order} not supported (0 or 1)")));
    }
    Ok(())
}

/// J_order(x) for order ∈ {0, 1} and finite x ≥ 0.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    check_order(order)?;
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("bessel_j requires finite x >= 0, got {x}")));
    }
    Ok(if order == 0 { j0(x) } else { j1(x) })
}

/// Y_order(x) for order ∈ {0, 1} and finite x > 0.
pub fn bessel_y(order: u32, x: f64) -> Result<f64> {
    check_order(order)?;
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("bessel_y requires finite x > 0, got {x}")));
    }
    Ok(if order == 0 { y0(x) } else { y1(x) })
}

/// H_order⁽¹⁾(x) = J + iY for order ∈ {0, 1} and x > 0. The incoming
/// kernels use the complex conjugate.
pub fn hankel1(order: u32, x: f64) -> Result<Complex64> {
    check_order(order)?;
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("hankel1 requires finite x > 0, got {x}")));
    }
    let (h0, h1) = hankel1_01(x);
    Ok(if order == 0 { h0 } else { h1 })
}

/// g±(λ) = −(log(λ/2) + γ)/(2π) ± i/4, without argument checks.
#[inline]
pub(crate) fn g_unchecked(sign: Sign, lambda: f64) -> Complex64 {
    Complex64::new(-((lambda / 2.0).ln() + EULER_GAMMA) / (2.0 * PI), sign.value() * 0.25)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Domain(format!("lambda must be finite and > 0, got {lambda}")));
    }
    Ok(())
}

pub fn g_pm(sign: Sign, lambda: f64) -> Result<Complex64> {
    check_lambda(lambda)?;
    Ok(g_unchecked(sign, lambda))
}

/// g₁±(λ) = −λ² g±(λ)/4 − λ²/(8π).
pub fn g1_pm(sign: Sign, lambda: f64) -> Result<Complex64> {
    check_lambda(lambda)?;
    let l2 = lambda * lambda;
    Ok(-g_unchecked(sign, lambda) * (l2 / 4.0) - l2 / (8.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        assert_relative_eq!(j0(2345.13), 0.012425605700760064, max_relative = 1e-12);
        assert_relative_eq!(y0(2.1752), 0.520660638047155, max_relative = 1e-12);
        assert_relative_eq!(j1(2.1752), 0.5593771605955342, max_relative = 1e-12);
        assert_relative_eq!(y1(0.00245), -259.84997363769, max_relative = 1e-12);
        assert_relative_eq!(y1(2345.13), -0.0124232991092643, max_relative = 1e-12);
    }

    #[test]
    fn fused_evaluations_agree() {
        for &x in &[0.3, 4.9, 5.0, 5.1, 17.0, 313.7] {
            let (h0, h1) = hankel1_01(x);
            assert_relative_eq!(h0.re, j0(x), max_relative = 1e-14);
            assert_relative_eq!(h0.im, y0(x), max_relative = 1e-14);
            assert_relative_eq!(h1.re, j1(x), max_relative = 1e-14);
            assert_relative_eq!(h1.im, y1(x), max_relative = 1e-14);
            let (a, b) = bessel_j01(x);
            assert_relative_eq!(a, j0(x), max_relative = 1e-14);
            assert_relative_eq!(b, j1(x), max_relative = 1e-14);
        }
    }

    #[test]
    fn g_examples() {
        let g = g_pm(Sign::Plus, 2.0).unwrap();
        assert_relative_eq!(g.re, -EULER_GAMMA / (2.0 * PI), max_relative = 1e-15);
        assert_eq!(g.im, 0.25);
        assert!(g_pm(Sign::Minus, 0.0).is_err());
    }
}
