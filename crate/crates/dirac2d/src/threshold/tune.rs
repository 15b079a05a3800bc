use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{t_from_a00, ThresholdAnalysis, Tolerances};
use crate::discretize::{assemble, factor_potential, Grid2, KernelSpec, PotentialSpec};
use crate::error::{Error, Result};
use crate::freeops::ExpansionTag;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneOptions {
    /// Which crossing in the range to return, counting from the smallest s.
    pub crossing: usize,
    /// Required σ_min(T(s*)).
    pub tol: f64,
    pub scan_points: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self { crossing: 0, tol: 1e-8, scan_points: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub s_star: f64,
    pub sigma_min: f64,
    /// Crossing couplings found in the range, ascending (distinct).
    pub crossings: Vec<f64>,
    /// (s, σ_min(T(s))) on a uniform grid over the range.
    pub scan: Vec<(f64, f64)>,
    pub analysis: ThresholdAnalysis,
}

/// Find s* in `s_range` where T(s) = U + s·vG₀,₀v* (v for unit coupling)
/// acquires a kernel.
///
/// T(s) = U(I + s·UK) with K = vG₀,₀v*, so crossings are s = −1/μ for the
/// real eigenvalues μ of UK; with U = ±I these are eigenvalues of the
/// Hermitian K. The crossing is then re-verified on a fresh factorization.
pub fn tune_coupling(
    spec: &PotentialSpec,
    grid: &Arc<Grid2>,
    s_range: (f64, f64),
    opts: TuneOptions,
) -> Result<TuneResult> {
    let (lo, hi) = s_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Validation(format!("coupling range must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if opts.scan_points < 2 {
        return Err(Error::Validation("scan needs at least two points".into()));
    }
    let unit = spec.with_coupling(1.0);
    let fp = factor_potential(&unit, grid)?;
    let a00 = assemble(KernelSpec::Expansion(ExpansionTag::G00), grid, None, None)?.into_matrix();
    let t1 = t_from_a00(&fp, &a00);
    let dim = t1.nrows();
    // K = T(1) − U
    let mut k = t1.clone();
    for (j, u) in fp.u.iter().enumerate() {
        k[(2 * j, 2 * j)] -= u[0];
        k[(2 * j + 1, 2 * j + 1)] -= u[1];
    }
    let scan_s: Vec<f64> =
        (0..opts.scan_points).map(|j| lo + (hi - lo) * j as f64 / (opts.scan_points - 1) as f64).collect();
    let (mut roots, scan) = match fp.uniform_signature() {
        Some([eps, _]) => {
            let kv = linalg::hermitian_eigenvalues(k.as_ref())?;
            let roots: Vec<f64> = kv.iter().filter(|&&m| m * eps < 0.0).map(|&m| -eps / m).collect();
            let scan = scan_s.iter().map(|&s| (s, kv.iter().map(|m| (eps + s * m).abs()).fold(f64::INFINITY, f64::min))).collect();
            (roots, scan)
        }
        None => {
            let uk = Mat::from_fn(dim, dim, |i, j| k[(i, j)] * fp.u[i / 2][i % 2]);
            let mu = uk.eigenvalues().map_err(|e| Error::Singular(format!("eigenvalues of UK: {e:?}")))?;
            let roots: Vec<f64> = mu
                .iter()
                .filter(|m| m.re != 0.0 && m.im.abs() <= 1e-8 * m.norm())
                .map(|m| -1.0 / m.re)
                .filter(|s| *s > 0.0)
                .collect();
            let mut scan = Vec::with_capacity(scan_s.len());
            for &s in &scan_s {
                let ts = Mat::from_fn(dim, dim, |i, j| {
                    let u = if i == j { fp.u[i / 2][i % 2] } else { 0.0 };
                    k[(i, j)] * s + u
                });
                let ev = linalg::hermitian_eigenvalues(ts.as_ref())?;
                scan.push((s, ev.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)));
            }
            (roots, scan)
        }
    };
    roots.retain(|s| *s >= lo && *s <= hi);
    roots.sort_by(f64::total_cmp);
    let mut crossings: Vec<f64> = Vec::new();
    for s in roots {
        match crossings.last() {
            Some(&prev) if (s - prev).abs() <= 1e-9 * s => {}
            _ => crossings.push(s),
        }
    }
    let s_star = *crossings.get(opts.crossing).ok_or(Error::NotFound { lo, hi })?;
    let analysis = ThresholdAnalysis::new(&spec.with_coupling(s_star), grid, Tolerances::default())?;
    let sigma_min = analysis.sigma_min();
    if !(sigma_min < opts.tol) {
        return Err(Error::Resolution(format!(
            "sigma_min(T(s*)) = {sigma_min:e} at s* = {s_star} exceeds {:e}",
            opts.tol
        )));
    }
    Ok(TuneResult { s_star, sigma_min, crossings, scan, analysis })
}
