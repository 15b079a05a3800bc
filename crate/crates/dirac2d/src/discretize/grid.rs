use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::nystrom::NearTables;
use crate::error::{Error, Result};
use crate::freeops::Point2;

/// Default sinh stretching parameter of the tensor grid.
pub const DEFAULT_STRETCH: f64 = 2.5;

/// Gauss–Legendre nodes (ascending) and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n_per_axis: usize,
    pub half_width: f64,
    #[serde(default = "default_stretch")]
    pub stretch: f64,
}

fn default_stretch() -> f64 {
    DEFAULT_STRETCH
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_per_axis: 33, half_width: 12.0, stretch: DEFAULT_STRETCH }
    }
}

/// Tensor-product grid on [−L, L]² with sinh-stretched Gauss–Legendre
/// nodes x = L sinh(aτ)/sinh(a) along each axis. Node k = i·n + j sits at
/// (axis[i], axis[j]).
#[derive(Debug)]
pub struct Grid2 {
    spec: GridSpec,
    tau: Vec<f64>,
    bary: Vec<f64>,
    axis: Vec<f64>,
    axis_weights: Vec<f64>,
    axis_spacing: Vec<f64>,
    nodes: Vec<Point2>,
    weights: Vec<f64>,
    sqrt_weights: Vec<f64>,
    near: OnceLock<Arc<NearTables>>,
}

/// Grid with the default stretch. Any n ≥ 8 is accepted.
pub fn build_grid(n_per_axis: usize, half_width: f64) -> Result<Arc<Grid2>> {
    Grid2::new(GridSpec { n_per_axis, half_width, stretch: DEFAULT_STRETCH })
}

impl Grid2 {
    pub fn new(spec: GridSpec) -> Result<Arc<Grid2>> {
        let GridSpec { n_per_axis: n, half_width: l, stretch: a } = spec;
        if n < 8 {
            return Err(Error::Validation(format!("n_per_axis must be >= 8, got {n}")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::Validation(format!("half width must be > 0, got {l}")));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Validation(format!("stretch must be >= 0, got {a}")));
        }
        let (tau, tw) = gauss_legendre(n);
        let bary: Vec<f64> = tau
            .iter()
            .zip(&tw)
            .enumerate()
            .map(|(j, (t, w))| {
                let s = ((1.0 - t * t) * w).sqrt();
                if j % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        let map = AxisMap { l, a };
        let axis: Vec<f64> = tau.iter().map(|&t| map.x(t)).collect();
        let axis_weights: Vec<f64> = tau.iter().zip(&tw).map(|(&t, &w)| map.dx(t) * w).collect();
        let axis_spacing = (0..n)
            .map(|i| {
                let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
                let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
                left.max(right)
            })
            .collect();
        let mut nodes = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                nodes.push(Point2::new(axis[i], axis[j]));
                weights.push(axis_weights[i] * axis_weights[j]);
            }
        }
        let sqrt_weights = weights.iter().map(|w| w.sqrt()).collect();
        Ok(Arc::new(Grid2 {
            spec,
            tau,
            bary,
            axis,
            axis_weights,
            axis_spacing,
            nodes,
            weights,
            sqrt_weights,
            near: OnceLock::new(),
        }))
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn n_per_axis(&self) -> usize {
        self.spec.n_per_axis
    }

    pub fn half_width(&self) -> f64 {
        self.spec.half_width
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_weights
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.axis_weights
    }

    pub fn same_as(&self, other: &Grid2) -> bool {
        std::ptr::eq(self, other) || self.spec == other.spec
    }

    pub fn integrate(&self, f: impl Fn(Point2) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn contains(&self, p: Point2) -> bool {
        let l = self.spec.half_width;
        p.x1.abs() <= l && p.x2.abs() <= l
    }

    fn map(&self) -> AxisMap {
        AxisMap { l: self.spec.half_width, a: self.spec.stretch }
    }

    /// Largest neighbouring node gap near coordinate value c.
    pub(crate) fn spacing_at(&self, c: f64) -> f64 {
        let idx = match self.axis.binary_search_by(|v| v.total_cmp(&c)) {
            Ok(i) => i,
            Err(i) => {
                if i == 0 {
                    0
                } else if i >= self.axis.len() {
                    self.axis.len() - 1
                } else if c - self.axis[i - 1] < self.axis[i] - c {
                    i - 1
                } else {
                    i
                }
            }
        };
        self.axis_spacing[idx]
    }

    /// Values of the 1D Lagrange basis at coordinate x ∈ [−L, L], written
    /// into `out` (length n). Barycentric form in the reference variable τ.
    pub(crate) fn lagrange_into(&self, x: f64, out: &mut [f64]) {
        let t = self.map().tau(x);
        let mut sum = 0.0;
        for (j, (&tj, &bj)) in self.tau.iter().zip(&self.bary).enumerate() {
            let d = t - tj;
            if d == 0.0 {
                out.fill(0.0);
                out[j] = 1.0;
                return;
            }
            out[j] = bj / d;
            sum += out[j];
        }
        for v in out.iter_mut() {
            *v /= sum;
        }
    }

    /// Spectral differentiation matrix d/dx on the axis nodes (row-major n×n).
    pub fn diff_matrix(&self) -> Vec<f64> {
        let n = self.spec.n_per_axis;
        let map = self.map();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = (self.bary[j] / self.bary[i]) / (self.tau[i] - self.tau[j]);
                    d[i * n + j] = v;
                    diag -= v;
                }
            }
            d[i * n + i] = diag;
            let s = 1.0 / map.dx(self.tau[i]);
            for j in 0..n {
                d[i * n + j] *= s;
            }
        }
        d
    }

    pub(crate) fn near_tables(self: &Arc<Self>) -> Arc<NearTables> {
        self.near.get_or_init(|| Arc::new(NearTables::build(self))).clone()
    }
}

#[derive(Debug, Clone, Copy)]
struct AxisMap {
    l: f64,
    a: f64,
}

impl AxisMap {
    fn x(&self, t: f64) -> f64 {
        if self.a == 0.0 {
            self.l * t
        } else {
            self.l * (self.a * t).sinh() / self.a.sinh()
        }
    }

    fn dx(&self, t: f64) -> f64 {
        if self.a == 0.0 {
            self.l
        } else {
            self.l * self.a * (self.a * t).cosh() / self.a.sinh()
        }
    }

    fn tau(&self, x: f64) -> f64 {
        if self.a == 0.0 {
            x / self.l
        } else {
            (x * self.a.sinh() / self.l).asinh() / self.a
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(9);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(16)).sum();
        assert!((s - 2.0 / 17.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lagrange_reproduces_nodes_and_partition_of_unity() {
        let g = build_grid(12, 5.0).unwrap();
        let mut out = vec![0.0; 12];
        g.lagrange_into(g.axis()[3], &mut out);
        assert!((out[3] - 1.0).abs() < 1e-12);
        g.lagrange_into(1.234, &mut out);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
