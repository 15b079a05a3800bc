use std::f64::consts::PI;

use num_complex::Complex64;

use super::LambdaContour;
use crate::discretize::gauss_legendre;
use crate::error::{Error, Result};
use crate::freeops::{alpha_dot, spectral_jump, Block, CutoffSpec, Point2};
use crate::specfun::bessel_j01;

const ORDER: usize = 16;
const PANEL_PHASE: f64 = 4.0;
const DOUBLING_TOL: f64 = 1e-3;

/// Radial parts (A, B) of the free kernel e^{−itD₀}χ(D₀)(x, y) = A·I + B·α·d̂,
/// d = x − y, r = |d|:
/// A = (1/2π)∫₀ cos(tκ)χ(κ)κJ₀(κr)dκ, B = (1/2π)∫₀ sin(tκ)χ(κ)κJ₁(κr)dκ.
pub fn free_kernel_parts(t: f64, r: f64, cutoff: CutoffSpec) -> Result<(f64, f64)> {
    if !(t.is_finite() && r.is_finite() && r >= 0.0) {
        return Err(Error::Validation("free kernel needs finite t and r >= 0".into()));
    }
    let panels = panel_count(t, r, cutoff);
    let coarse = parts_with_panels(t, r, cutoff, panels);
    let fine = parts_with_panels(t, r, cutoff, 2 * panels);
    let scale = fine.0.abs().max(fine.1.abs());
    let gap = (coarse.0 - fine.0).abs().max((coarse.1 - fine.1).abs());
    if gap > DOUBLING_TOL * scale && gap > 1e-14 {
        return Err(Error::Resolution(format!("free kernel at t = {t}, r = {r}: doubling gap {gap:e}")));
    }
    Ok(fine)
}

fn panel_count(t: f64, r: f64, cutoff: CutoffSpec) -> usize {
    let rate = t.abs() + r + 1.0;
    ((rate * cutoff.support() / PANEL_PHASE).ceil() as usize).max(2)
}

fn parts_with_panels(t: f64, r: f64, cutoff: CutoffSpec, panels: usize) -> (f64, f64) {
    let (x, w) = gauss_legendre(ORDER);
    let top = cutoff.support();
    let h = top / panels as f64;
    let mut a = 0.0;
    let mut b = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            let k = mid + 0.5 * h * xi;
            let weight = 0.5 * h * wi * cutoff.chi(k) * k;
            let (j0, j1) = bessel_j01(k * r);
            let (s, c) = (t * k).sin_cos();
            a += weight * c * j0;
            b += weight * s * j1;
        }
    }
    (a / (2.0 * PI), b / (2.0 * PI))
}

/// e^{−itD₀}χ(D₀)(x, y) with the Stone factor 1/(2πi) included.
pub fn free_evolution(t: f64, x: Point2, y: Point2, cutoff: CutoffSpec) -> Result<Block> {
    let d = x - y;
    let r = d.norm();
    let (a, b) = free_kernel_parts(t, r, cutoff)?;
    Ok(assemble_parts(a, b, d))
}

fn assemble_parts(a: f64, b: f64, d: Point2) -> Block {
    let r = d.norm();
    let mut out = Block::scalar(a.into());
    if r > 0.0 {
        out += alpha_dot(d.x1 / r, d.x2 / r) * b;
    }
    out
}

/// Operator norm of A·I + B·α·d̂.
pub fn parts_norm(a: f64, b: f64) -> f64 {
    (a + b).abs().max((a - b).abs())
}

/// Same kernel by quadrature of e^{−itλ}μ₀(λ)/(2πi) over a signed contour.
pub fn free_evolution_on(contour: &LambdaContour, t: f64, x: Point2, y: Point2, cutoff: CutoffSpec) -> Result<Block> {
    let d = x - y;
    contour.check_rate(t.abs() + d.norm())?;
    let pref = Complex64::new(0.0, -1.0 / (2.0 * PI));
    let mut acc = Block::ZERO;
    for (&l, &w) in contour.nodes().iter().zip(contour.weights()) {
        let phase = Complex64::from_polar(1.0, -t * l);
        acc += spectral_jump(l, d) * (phase * pref * (w * cutoff.chi(l)));
    }
    Ok(acc)
}

/// Same kernel through half-period averaging: with μ(λ) = χ(λ)[𝓡₀⁺ − 𝓡₀⁻](λ),
/// ∫e^{−itλ}μ(λ)dλ = ½∫e^{−itλ}[μ(λ) − μ(λ − π/t)]dλ. Needs t ≠ 0.
pub fn free_evolution_half_period(t: f64, x: Point2, y: Point2, cutoff: CutoffSpec) -> Result<Block> {
    if t == 0.0 {
        return Err(Error::Domain("half-period averaging needs t != 0".into()));
    }
    let d = x - y;
    let shift = PI / t;
    let top = cutoff.support();
    // breakpoints at the kinks of μ(λ) and μ(λ − shift)
    let mut cuts = vec![-top, 0.0, top, shift - top, shift, shift + top];
    cuts.sort_by(f64::total_cmp);
    let panels = panel_count(t, d.norm(), cutoff);
    let (gx, gw) = gauss_legendre(ORDER);
    let mu = |l: f64| -> Block {
        let chi = cutoff.chi(l);
        if chi == 0.0 {
            Block::ZERO
        } else {
            spectral_jump(l, d) * chi
        }
    };
    let pref = Complex64::new(0.0, -1.0 / (4.0 * PI));
    let mut acc = Block::ZERO;
    for win in cuts.windows(2) {
        let (a, b) = (win[0], win[1]);
        if b - a <= 0.0 {
            continue;
        }
        let m = ((panels as f64 * (b - a) / top).ceil() as usize).max(1);
        let h = (b - a) / m as f64;
        for p in 0..m {
            let mid = a + (p as f64 + 0.5) * h;
            for (xi, wi) in gx.iter().zip(&gw) {
                let l = mid + 0.5 * h * xi;
                let phase = Complex64::from_polar(1.0, -t * l);
                acc += (mu(l) - mu(l - shift)) * (phase * pref * (0.5 * h * wi));
            }
        }
    }
    Ok(acc)
}

/// sup over x − y = d of ⟨x⟩^{−γ}⟨y⟩^{−γ}, attained at x = −y = d/2 for
/// |d| < 2 and equal to |d|^{−γ} beyond.
pub fn split_weight(d: f64, gamma: f64) -> f64 {
    if d < 2.0 {
        (1.0 + 0.25 * d * d).powf(-gamma)
    } else {
        d.powf(-gamma)
    }
}

/// sup_{x,y} |K_t(x, y)|⟨x⟩^{−γ}⟨y⟩^{−γ} for the free kernel, scanning
/// r = |x − y| on [0, r_max] with the given step.
pub fn free_weighted_sup(t: f64, gamma: f64, cutoff: CutoffSpec, r_max: f64, step: f64) -> Result<f64> {
    if !(step > 0.0 && r_max >= 0.0) {
        return Err(Error::Validation("scan needs step > 0 and r_max >= 0".into()));
    }
    let count = (r_max / step).ceil() as usize;
    let mut best: f64 = 0.0;
    for k in 0..=count {
        let r = (k as f64 * step).min(r_max);
        let (a, b) = free_kernel_parts(t, r, cutoff)?;
        best = best.max(parts_norm(a, b) * split_weight(r, gamma));
    }
    Ok(best)
}
