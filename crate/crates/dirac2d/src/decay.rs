//! Power-law decay fits and log-boundedness verdicts for kernel time series.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 5;

/// Least-squares slope of log(norm) against log(t) over samples with
/// t in [t_min, t_max], with its standard error.
pub fn fit_decay(samples: &[(f64, f64)], t_min: f64, t_max: f64) -> Result<(f64, f64)> {
    let window: Vec<(f64, f64)> = samples.iter().copied().filter(|&(t, _)| t >= t_min && t <= t_max).collect();
    if window.len() < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "decay fit needs at least {MIN_SAMPLES} samples in [{t_min}, {t_max}], got {}",
            window.len()
        )));
    }
    if let Some(&(t, y)) = window.iter().find(|&&(t, y)| !(t > 0.0 && y > 0.0 && y.is_finite())) {
        return Err(Error::Domain(format!("decay fit needs t > 0 and finite norm > 0, got ({t}, {y})")));
    }
    let n = window.len() as f64;
    let xs: Vec<f64> = window.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("decay fit needs distinct times".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogBoundVerdict {
    /// max(norm·log t)/min(norm·log t) over the samples
    pub ratio: f64,
    pub pass: bool,
}

/// Whether norm(t) stays within a fixed factor of 1/log t: passes iff the
/// spread of norm·log t across the samples is below 5. Samples with t < 2
/// are ignored.
pub fn check_log_bounded(samples: &[(f64, f64)]) -> LogBoundVerdict {
    let vals: Vec<f64> = samples.iter().filter(|p| p.0 >= 2.0).map(|&(t, y)| y.abs() * t.ln()).collect();
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if vals.is_empty() { f64::NAN } else { hi / lo };
    LogBoundVerdict { ratio, pass: ratio < 5.0 }
}

/// Largest change of the fitted exponent when the window is cut to its
/// lower or upper half in log t, and twice the full-window stderr.
pub fn window_halving_shift(samples: &[(f64, f64)], t_min: f64, t_max: f64) -> Result<(f64, f64)> {
    let (full, se) = fit_decay(samples, t_min, t_max)?;
    let mid = (t_min * t_max).sqrt();
    let lower = fit_decay(samples, t_min, mid)?.0;
    let upper = fit_decay(samples, mid, t_max)?.0;
    Ok(((lower - full).abs().max((upper - full).abs()), 2.0 * se))
}

/// t₀, t₀·r, t₀·r², … up to t₁ (inclusive within rounding).
pub fn geometric_times(t0: f64, t1: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(t0 > 0.0 && t1 >= t0 && ratio > 1.0) {
        return Err(Error::Validation("geometric times need 0 < t0 <= t1 and ratio > 1".into()));
    }
    let mut out = vec![t0];
    loop {
        let next = out.last().unwrap() * ratio;
        if next > t1 * (1.0 + 1e-12) {
            break;
        }
        out.push(next);
    }
    Ok(out)
}

/// Weighted sup-norms of one kernel family with its fitted exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub gamma: f64,
    pub provenance: String,
    pub samples: Vec<(f64, f64)>,
    pub fit_exponent: f64,
    pub fit_stderr: f64,
}

impl DecaySeries {
    /// Validates ordering and positivity and fits over all samples.
    pub fn new(gamma: f64, provenance: impl Into<String>, samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Validation("decay series times must be strictly increasing".into()));
        }
        let (t_min, t_max) = match (samples.first(), samples.last()) {
            (Some(a), Some(b)) => (a.0, b.0),
            _ => return Err(Error::Precondition("empty decay series".into())),
        };
        let (fit_exponent, fit_stderr) = fit_decay(&samples, t_min, t_max)?;
        Ok(Self { gamma, provenance: provenance.into(), samples, fit_exponent, fit_stderr })
    }

    pub fn refit(&self, t_min: f64, t_max: f64) -> Result<(f64, f64)> {
        fit_decay(&self.samples, t_min, t_max)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: f64,
    norm: f64,
    gamma: f64,
    provenance: String,
}

/// CSV with header `t,norm,gamma,provenance`, one row per sample.
pub fn write_csv<W: Write>(out: W, series: &[DecaySeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in series {
        for &(t, norm) in &s.samples {
            w.serialize(Row { t, norm, gamma: s.gamma, provenance: s.provenance.clone() })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_csv`], grouped by (gamma, provenance) in
/// order of first appearance, and refits each group.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<DecaySeries>> {
    let mut groups: Vec<(f64, String, Vec<(f64, f64)>)> = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: Row = row?;
        match groups.iter_mut().find(|g| g.0 == row.gamma && g.1 == row.provenance) {
            Some(g) => g.2.push((row.t, row.norm)),
            None => groups.push((row.gamma, row.provenance, vec![(row.t, row.norm)])),
        }
    }
    groups.into_iter().map(|(g, p, s)| DecaySeries::new(g, p, s)).collect()
}
