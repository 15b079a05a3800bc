use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discretize::gauss_legendre;
use crate::error::{Error, Result};
use crate::freeops::CutoffSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourParams {
    /// Innermost node panel starts here; |λ| < lambda_min is handled apart.
    pub lambda_min: f64,
    /// Geometric growth of the panels near 0.
    pub ratio: f64,
    /// Gauss–Legendre order on the geometric panels.
    pub geometric_order: usize,
    /// Gauss–Legendre order on the uniform panels.
    pub order: usize,
    /// Largest phase change (radians) across one panel at the design rate.
    pub panel_phase: f64,
}

impl Default for ContourParams {
    fn default() -> Self {
        Self { lambda_min: 1e-6, ratio: 1.3, geometric_order: 4, order: 8, panel_phase: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Panel {
    a: f64,
    b: f64,
    order: usize,
}

/// Quadrature for λ-integrals over supp χ, symmetric about 0, with
/// geometric panels toward λ = 0 and uniform panels elsewhere.
///
/// The design rate ω bounds the oscillation e^{iωλ} the panels resolve;
/// for kernels at (x, y) and time t use ω ≥ |t| + |x| + |y|.
#[derive(Debug, Clone)]
pub struct LambdaContour {
    params: ContourParams,
    rate: f64,
    support: f64,
    panels: Vec<Panel>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LambdaContour {
    pub fn new(cutoff: CutoffSpec, rate: f64) -> Result<Self> {
        Self::with_params(cutoff, rate, ContourParams::default())
    }

    pub fn with_params(cutoff: CutoffSpec, rate: f64, params: ContourParams) -> Result<Self> {
        let support = cutoff.support();
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::Validation(format!("contour rate must be >= 0, got {rate}")));
        }
        if !(params.lambda_min > 0.0 && params.lambda_min < support) {
            return Err(Error::Validation(format!("lambda_min must lie in (0, {support})")));
        }
        if !(params.ratio > 1.0) || params.order == 0 || params.geometric_order == 0 || !(params.panel_phase > 0.0) {
            return Err(Error::Validation("contour parameters out of range".into()));
        }
        // the cutoff transition spans a quarter of the support
        let width = (params.panel_phase / rate.max(1.0)).min(0.125 * support);
        let mut panels = Vec::new();
        let mut a = params.lambda_min;
        loop {
            let b = a * params.ratio;
            if b - a >= width || b >= support {
                break;
            }
            panels.push(Panel { a, b, order: params.geometric_order });
            a = b;
        }
        let count = ((support - a) / width).ceil().max(1.0) as usize;
        let h = (support - a) / count as f64;
        for k in 0..count {
            let lo = a + k as f64 * h;
            let hi = if k + 1 == count { support } else { lo + h };
            panels.push(Panel { a: lo, b: hi, order: params.order });
        }
        Ok(Self::from_panels(params, rate, support, panels))
    }

    fn from_panels(params: ContourParams, rate: f64, support: f64, panels: Vec<Panel>) -> Self {
        let mut pos = Vec::new();
        let mut pw = Vec::new();
        for p in &panels {
            let (x, w) = gauss_legendre(p.order);
            let half = 0.5 * (p.b - p.a);
            let mid = 0.5 * (p.a + p.b);
            for (xi, wi) in x.iter().zip(&w) {
                pos.push(mid + half * xi);
                pw.push(half * wi);
            }
        }
        let mut nodes: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
        let mut weights: Vec<f64> = pw.iter().rev().copied().collect();
        nodes.extend(&pos);
        weights.extend(&pw);
        Self { params, rate, support, panels, nodes, weights }
    }

    /// Every panel split in two.
    pub fn refined(&self) -> Self {
        let panels = self
            .panels
            .iter()
            .flat_map(|p| {
                let m = 0.5 * (p.a + p.b);
                [Panel { a: p.a, b: m, order: p.order }, Panel { a: m, b: p.b, order: p.order }]
            })
            .collect();
        Self::from_panels(self.params, 2.0 * self.rate, self.support, panels)
    }

    pub fn params(&self) -> ContourParams {
        self.params
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn lambda_min(&self) -> f64 {
        self.params.lambda_min
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Signed nodes, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes on λ > 0 with weights.
    pub fn positive(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = self.nodes.len() / 2;
        self.nodes[h..].iter().copied().zip(self.weights[h..].iter().copied())
    }

    /// Σ wₖ f(λₖ) over both half-lines (excluding |λ| < lambda_min).
    pub fn integrate(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }

    /// Fails when the requested oscillation rate exceeds the design rate.
    pub fn check_rate(&self, rate: f64) -> Result<()> {
        if rate > self.rate * (1.0 + 1e-12) {
            Err(Error::Resolution(format!(
                "contour designed for rate {:.1} cannot resolve rate {rate:.1}",
                self.rate
            )))
        } else {
            Ok(())
        }
    }
}

/// ∫_{−∞}^{∞} e^{−itλ}χ(λ)/(λ log²|λ|) dλ on the contour. The integrand is
/// odd, so this is −2i∫₀ sin(tλ)χ/(λ log²λ); the piece below lambda_min is
/// bounded by 2|t|·lambda_min/log²(lambda_min) and added at first order.
pub fn model_integral(t: f64, contour: &LambdaContour, cutoff: CutoffSpec) -> Result<Complex64> {
    contour.check_rate(t.abs())?;
    let s: f64 = contour
        .positive()
        .map(|(l, w)| w * (t * l).sin() * cutoff.chi(l) / (l * l.ln().powi(2)))
        .sum();
    let lm = contour.lambda_min();
    // ∫₀^{lm} sin(tλ)/(λ log²λ) ≈ t∫₀^{lm} dλ/log²λ ≈ t·lm/log²(lm)
    let small = t * lm / lm.ln().powi(2);
    Ok(Complex64::new(0.0, -2.0 * (s + small)))
}
