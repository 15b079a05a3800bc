//! Angular-channel oracle for [𝓡_V⁺ − 𝓡_V⁻](λ) when V = v(|x|)·I.
//!
//! In channel m the generalized eigenfunctions are
//! Φ_m = (f(r)e^{imθ}, i·g(r)e^{i(m+1)θ}) with
//! f′ = m f/r + (v − λ)g,  g′ = −(m+1)g/r − (v − λ)f,
//! shot outward from the regular series at r = 0 and matched to
//! f = a·J_m(kr) + b·Y_m(kr), k = |λ|, outside the support of v. With Φ
//! scaled by 1/√(a² + b²) the jump is (i|λ|/2)Σ_m Φ_m(x)Φ_m(y)*.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discretize::{KernelSamples, PotentialSpec};
use crate::error::{Error, Result};
use crate::freeops::{Block, Point2};
use crate::specfun::{j0, j1, y0, y1};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelOptions {
    /// Channels m = −m_max−1 ..= m_max are summed.
    pub m_max: usize,
    /// Largest RK4 step.
    pub step: f64,
    /// |v| below this counts as outside the support.
    pub support_tol: f64,
}

impl Default for ChannelOptions {
    fn default() -> Self {
        Self { m_max: 24, step: 1e-3, support_tol: 1e-14 }
    }
}

/// J_m(x) for m = 0..=order by Miller's backward recurrence.
fn bessel_j_all(order: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; order + 1];
        v[0] = 1.0;
        return v;
    }
    if order <= 1 || x > order as f64 {
        // forward recurrence is stable while m < x
        let mut v = vec![j0(x), j1(x)];
        for m in 1..order {
            v.push(2.0 * m as f64 / x * v[m] - v[m - 1]);
        }
        v.truncate(order + 1);
        return v;
    }
    let start = 2 * ((order.max(x as usize) + 16 + (40.0 * order as f64).sqrt() as usize) / 2);
    let mut v = vec![0.0; start + 2];
    v[start] = 1e-300;
    for k in (1..=start).rev() {
        v[k - 1] = 2.0 * k as f64 / x * v[k] - v[k + 1];
        if v[k - 1].abs() > 1e250 {
            for z in v.iter_mut() {
                *z *= 1e-250;
            }
        }
    }
    // 1 = J₀ + 2ΣJ_{2k}
    let norm = v[0] + 2.0 * v.iter().skip(2).step_by(2).sum::<f64>();
    v.truncate(order + 1);
    v.iter().map(|z| z / norm).collect()
}

/// Y_m(x) for m = 0..=order, x > 0, by forward recurrence.
fn bessel_y_all(order: usize, x: f64) -> Vec<f64> {
    let mut v = vec![y0(x), y1(x)];
    for m in 1..order {
        v.push(2.0 * m as f64 / x * v[m] - v[m - 1]);
    }
    v.truncate(order + 1);
    v
}

/// Regular (f, g) in channel m ≥ 0 at each target radius, scaled so the
/// asymptotic amplitude is one.
fn channel_solution(m: usize, lambda: f64, v: &dyn Fn(f64) -> f64, radii: &[f64], r_match: f64, step: f64) -> Vec<(f64, f64)> {
    let mf = m as f64;
    let rhs = |r: f64, f: f64, g: f64| -> (f64, f64) {
        let w = v(r) - lambda;
        (mf * f / r + w * g, -(mf + 1.0) * g / r - w * f)
    };
    let v0 = v(0.0);
    let series = |r: f64| -> (f64, f64) {
        let p = r.powi(m as i32);
        (p, -(v0 - lambda) * p * r / (2.0 * mf + 2.0))
    };
    let r0 = 1e-4;
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let mut out = vec![(0.0, 0.0); radii.len()];
    let (mut f, mut g) = series(r0);
    let mut r = r0;
    let advance = |r: &mut f64, f: &mut f64, g: &mut f64, target: f64| {
        while *r < target {
            let h = (0.02 * *r / (mf + 1.0)).max(1e-6).min(step).min(target - *r);
            let (k1f, k1g) = rhs(*r, *f, *g);
            let (k2f, k2g) = rhs(*r + 0.5 * h, *f + 0.5 * h * k1f, *g + 0.5 * h * k1g);
            let (k3f, k3g) = rhs(*r + 0.5 * h, *f + 0.5 * h * k2f, *g + 0.5 * h * k2g);
            let (k4f, k4g) = rhs(*r + h, *f + h * k3f, *g + h * k3g);
            *f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
            *g += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
            *r += h;
        }
    };
    for &k in &order {
        let target = radii[k];
        if target <= r0 {
            out[k] = series(target);
            continue;
        }
        advance(&mut r, &mut f, &mut g, target);
        out[k] = (f, g);
    }
    let target = r_match.max(r);
    advance(&mut r, &mut f, &mut g, target);
    // match (f, g) = a(J_m, sJ_{m+1}) + b(Y_m, sY_{m+1})
    let kr = lambda.abs() * r;
    let s = lambda.signum();
    let jv = bessel_j_all(m + 1, kr);
    let yv = bessel_y_all(m + 1, kr);
    let (j_m, j_n, y_m, y_n) = (jv[m], s * jv[m + 1], yv[m], s * yv[m + 1]);
    let det = j_m * y_n - y_m * j_n;
    let a = (f * y_n - y_m * g) / det;
    let b = (j_m * g - f * j_n) / det;
    let amp = a.hypot(b);
    out.iter().map(|&(f, g)| (f / amp, g / amp)).collect()
}

/// [𝓡_V⁺ − 𝓡_V⁻](λ)(x, y) for a radial scalar potential.
pub fn channel_density(
    spec: &PotentialSpec,
    lambda: f64,
    xs: &[Point2],
    ys: &[Point2],
    opts: ChannelOptions,
) -> Result<KernelSamples> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be finite and nonzero, got {lambda}")));
    }
    let v = spec
        .radial_scalar_profile()
        .ok_or_else(|| Error::Validation("channel oracle needs a radial scalar potential".into()))?;
    let r_match = spec.support_radius(opts.support_tol).max(1.0);
    let pts: Vec<Point2> = xs.iter().chain(ys).copied().collect();
    let radii: Vec<f64> = pts.iter().map(|p| p.norm()).collect();
    let np = pts.len();
    // Φ_m at every point for m in −m_max−1 ..= m_max
    let mut phi: Vec<Vec<[Complex64; 2]>> = vec![Vec::with_capacity(2 * opts.m_max + 2); np];
    for m in 0..=opts.m_max {
        let sol = channel_solution(m, lambda, &*v, &radii, r_match, opts.step);
        for (k, (&p, &(f, g))) in pts.iter().zip(&sol).enumerate() {
            let th = p.x2.atan2(p.x1);
            let mi = m as f64;
            let up = Complex64::from_polar(f, mi * th);
            let lo = Complex64::new(0.0, g) * Complex64::from_polar(1.0, (mi + 1.0) * th);
            phi[k].push([up, lo]);
            // channel −m−1 from (f, g) ↦ (−g, f)
            let mm = -(mi + 1.0);
            let up = Complex64::from_polar(-g, mm * th);
            let lo = Complex64::new(0.0, f) * Complex64::from_polar(1.0, (mm + 1.0) * th);
            phi[k].push([up, lo]);
        }
    }
    let pref = Complex64::new(0.0, 0.5 * lambda.abs());
    let nx = xs.len();
    Ok(KernelSamples::from_fn(xs.to_vec(), ys.to_vec(), |x, y| {
        let i = xs.iter().position(|&p| p == x).unwrap();
        let j = nx + ys.iter().position(|&p| p == y).unwrap();
        let mut b = Block::ZERO;
        for (a, c) in phi[i].iter().zip(&phi[j]) {
            for p in 0..2 {
                for q in 0..2 {
                    b.0[p][q] += a[p] * c[q].conj();
                }
            }
        }
        b * pref
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freeops::spectral_jump;

    #[test]
    fn miller_matches_closed_forms() {
        for &x in &[0.3, 2.0, 7.5, 30.0] {
            let v = bessel_j_all(6, x);
            assert!((v[0] - j0(x)).abs() < 1e-13);
            assert!((v[1] - j1(x)).abs() < 1e-13);
            // J₂ = 2J₁/x − J₀
            assert!((v[2] - (2.0 * j1(x) / x - j0(x))).abs() < 1e-12);
            // Wronskian J_{m+1}Y_m − J_mY_{m+1} = 2/(πx)
            let y = bessel_y_all(6, x);
            for m in 0..6 {
                let w = v[m + 1] * y[m] - v[m] * y[m + 1];
                assert!((w - 2.0 / (std::f64::consts::PI * x)).abs() < 1e-10 * (1.0 + y[m].abs()), "m = {m}, x = {x}");
            }
        }
    }

    #[test]
    fn free_channels_reproduce_the_jump() {
        let xs = [Point2::new(0.0, 0.0), Point2::new(2.0, -1.0)];
        let ys = [Point2::new(1.0, 3.0), Point2::new(-0.5, 0.5)];
        for &l in &[0.05, -0.3] {
            let k = channel_density(&PotentialSpec::zero(), l, &xs, &ys, ChannelOptions::default()).unwrap();
            for (i, &x) in xs.iter().enumerate() {
                for (j, &y) in ys.iter().enumerate() {
                    let err = (k.get(i, j) - spectral_jump(l, x - y)).max_abs();
                    assert!(err < 1e-8 * l.abs(), "{err}");
                }
            }
        }
    }
}
