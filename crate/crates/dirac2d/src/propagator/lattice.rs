//! Periodic-lattice oracle: H = α·ξ (exact Fourier symbol) + V(x) on a
//! square lattice, with f(H) = e^{−itH}χ(H) applied by Chebyshev expansion.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{EvolutionKernel, Provenance};
use crate::discretize::{KernelSamples, PotentialSpec};
use crate::error::{Error, Result};
use crate::freeops::{Block, CutoffSpec, Point2};
use crate::linalg::{self, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeOptions {
    pub spacing: f64,
    /// Box is [−B, B)² with periodic wrap.
    pub half_width: f64,
    /// Extra distance kept free of periodic images beyond the light cone.
    pub margin: f64,
    /// Chebyshev series truncated below this fraction of its largest term.
    pub series_tol: f64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        Self { spacing: 1.0, half_width: 64.0, margin: 40.0, series_tol: 1e-9 }
    }
}

#[derive(Clone)]
pub struct LatticePropagator {
    opts: LatticeOptions,
    cutoff: CutoffSpec,
    m: usize,
    potential: Vec<Block>,
    xi1: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// spectral half-range used to scale H into [−1, 1]
    scale: f64,
}

impl std::fmt::Debug for LatticePropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticePropagator").field("opts", &self.opts).field("m", &self.m).finish()
    }
}

impl LatticePropagator {
    pub fn new(spec: &PotentialSpec, cutoff: CutoffSpec, opts: LatticeOptions) -> Result<Self> {
        spec.validate()?;
        if !(opts.spacing > 0.0 && opts.half_width > 0.0 && opts.margin >= 0.0 && opts.series_tol > 0.0) {
            return Err(Error::Validation("lattice options out of range".into()));
        }
        let m = (2.0 * opts.half_width / opts.spacing).round() as usize;
        if m < 4 || ((m as f64) * opts.spacing - 2.0 * opts.half_width).abs() > 1e-9 * opts.half_width {
            return Err(Error::Validation("lattice half-width must be a multiple of spacing/2".into()));
        }
        let h = opts.spacing;
        let site = |k: usize| -opts.half_width + k as f64 * h;
        let mut potential = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                potential.push(spec.value_at(Point2::new(site(i), site(j))));
            }
        }
        let vmax = potential.iter().map(|b| b.norm()).fold(0.0, f64::max);
        let xi1 = (0..m)
            .map(|k| {
                let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
                2.0 * PI * kk / (m as f64 * h)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scale = 1.01 * (std::f64::consts::SQRT_2 * PI / h + vmax);
        Ok(Self { opts, cutoff, m, potential, xi1, forward, inverse, scale })
    }

    pub fn options(&self) -> LatticeOptions {
        self.opts
    }

    pub fn sites_per_axis(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        2 * self.m * self.m
    }

    /// Lattice index of a point, which must be a lattice site.
    pub fn site_index(&self, p: Point2) -> Result<usize> {
        let h = self.opts.spacing;
        let b = self.opts.half_width;
        let idx = |x: f64| -> Option<usize> {
            let k = (x + b) / h;
            let r = k.round();
            ((k - r).abs() < 1e-9 && r >= 0.0 && (r as usize) < self.m).then_some(r as usize)
        };
        match (idx(p.x1), idx(p.x2)) {
            (Some(i), Some(j)) => Ok(i * self.m + j),
            _ => Err(Error::Validation(format!("point ({}, {}) is not a lattice site", p.x1, p.x2))),
        }
    }

    fn fft2(&self, data: &mut [Complex64], forward: bool) {
        let m = self.m;
        let plan = if forward { &self.forward } else { &self.inverse };
        plan.process(data);
        let mut col = vec![Complex64::default(); m];
        for j in 0..m {
            for i in 0..m {
                col[i] = data[i * m + j];
            }
            plan.process(&mut col);
            for i in 0..m {
                data[i * m + j] = col[i];
            }
        }
    }

    /// H applied to ψ stored as [upper | lower], each m² values row-major.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.m * self.m;
        let mut u = psi[..n].to_vec();
        let mut w = psi[n..].to_vec();
        self.fft2(&mut u, true);
        self.fft2(&mut w, true);
        let norm = 1.0 / n as f64;
        let mut hu = vec![Complex64::default(); n];
        let mut hw = vec![Complex64::default(); n];
        for i in 0..self.m {
            for j in 0..self.m {
                let k = i * self.m + j;
                let (a, b) = (self.xi1[i], self.xi1[j]);
                hu[k] = Complex64::new(a, -b) * w[k] * norm;
                hw[k] = Complex64::new(a, b) * u[k] * norm;
            }
        }
        self.fft2(&mut hu, false);
        self.fft2(&mut hw, false);
        let mut out = hu;
        out.extend(hw);
        for (k, v) in self.potential.iter().enumerate() {
            let (p, q) = (psi[k], psi[n + k]);
            out[k] += v.0[0][0] * p + v.0[0][1] * q;
            out[n + k] += v.0[1][0] * p + v.0[1][1] * q;
        }
        out
    }

    /// Chebyshev coefficients of e^{−itE}χ(E) on [−scale, scale].
    fn coefficients(&self, t: f64) -> Vec<Complex64> {
        let a = self.scale;
        // enough nodes to resolve both the phase and the cutoff transition
        let nodes = (4.0 * (t.abs() * a + 64.0 * a / self.cutoff.lambda1)).ceil() as usize;
        let vals: Vec<(f64, Complex64)> = (0..nodes)
            .map(|j| {
                let th = PI * (j as f64 + 0.5) / nodes as f64;
                let e = a * th.cos();
                (th, Complex64::from_polar(self.cutoff.chi(e), -t * e))
            })
            .collect();
        let mut c: Vec<Complex64> = (0..nodes)
            .map(|k| {
                let s: Complex64 = vals.iter().map(|(th, f)| f * (k as f64 * th).cos()).sum();
                s * (2.0 / nodes as f64)
            })
            .collect();
        c[0] *= 0.5;
        let big = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let last = c.iter().rposition(|z| z.norm() > self.opts.series_tol * big).unwrap_or(0);
        c.truncate(last + 1);
        c
    }

    /// f_t(H)ψ for every t in `times`, sharing one Chebyshev recurrence.
    pub fn apply_function(&self, times: &[f64], psi: &[Complex64]) -> Vec<Vec<Complex64>> {
        let coeffs: Vec<Vec<Complex64>> = times.iter().map(|&t| self.coefficients(t)).collect();
        let terms = coeffs.iter().map(Vec::len).max().unwrap_or(0);
        let dim = psi.len();
        let mut acc = vec![vec![Complex64::default(); dim]; times.len()];
        let inv = 1.0 / self.scale;
        let mut prev = psi.to_vec();
        let mut cur: Vec<Complex64> = self.apply(psi).into_iter().map(|z| z * inv).collect();
        for (a, c) in acc.iter_mut().zip(&coeffs) {
            for k in 0..dim {
                a[k] += c[0] * prev[k];
                if c.len() > 1 {
                    a[k] += c[1] * cur[k];
                }
            }
        }
        for n in 2..terms {
            let hc = self.apply(&cur);
            let next: Vec<Complex64> = hc.iter().zip(&prev).map(|(h, p)| h * (2.0 * inv) - p).collect();
            for (a, c) in acc.iter_mut().zip(&coeffs) {
                if let Some(cn) = c.get(n) {
                    for k in 0..dim {
                        a[k] += cn * next[k];
                    }
                }
            }
            prev = cur;
            cur = next;
        }
        acc
    }

    fn check_causality(&self, t: f64, xs: &[Point2], ys: &[Point2]) -> Result<()> {
        let reach = xs.iter().map(|p| p.norm()).fold(0.0, f64::max) + ys.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let free = 2.0 * self.opts.half_width - reach;
        if free < t.abs() + self.opts.margin {
            return Err(Error::Causality(format!(
                "half-width {} leaves {free:.1} of clearance, need |t| + margin = {:.1}",
                self.opts.half_width,
                t.abs() + self.opts.margin
            )));
        }
        Ok(())
    }

    /// e^{−itH}χ(H)(x, y) for all t, at lattice sites.
    pub fn evolve(&self, times: &[f64], xs: &[Point2], ys: &[Point2]) -> Result<Vec<EvolutionKernel>> {
        for &t in times {
            self.check_causality(t, xs, ys)?;
        }
        let n = self.m * self.m;
        let xi: Vec<usize> = xs.iter().map(|&p| self.site_index(p)).collect::<Result<_>>()?;
        let yi: Vec<usize> = ys.iter().map(|&p| self.site_index(p)).collect::<Result<_>>()?;
        let h2 = self.opts.spacing * self.opts.spacing;
        let mut mats: Vec<CMat> = times.iter().map(|_| Mat::zeros(2 * xs.len(), 2 * ys.len())).collect();
        for (j, &y) in yi.iter().enumerate() {
            for c in 0..2 {
                let mut delta = vec![Complex64::default(); 2 * n];
                delta[c * n + y] = Complex64::new(1.0, 0.0);
                let out = self.apply_function(times, &delta);
                for (mat, col) in mats.iter_mut().zip(&out) {
                    for (i, &x) in xi.iter().enumerate() {
                        mat[(2 * i, 2 * j + c)] = col[x] / h2;
                        mat[(2 * i + 1, 2 * j + c)] = col[n + x] / h2;
                    }
                }
            }
        }
        Ok(times
            .iter()
            .zip(mats)
            .map(|(&t, m)| EvolutionKernel {
                t,
                provenance: Provenance::OracleFull,
                samples: KernelSamples::from_matrix(xs.to_vec(), ys.to_vec(), m.as_ref()),
            })
            .collect())
    }

    /// Dense H for small lattices.
    pub fn dense_hamiltonian(&self) -> Result<CMat> {
        let dim = self.dim();
        if dim > 4096 {
            return Err(Error::Validation(format!("dense lattice Hamiltonian of size {dim} is too large")));
        }
        let mut h = Mat::<Complex64>::zeros(dim, dim);
        let mut e = vec![Complex64::default(); dim];
        for j in 0..dim {
            e[j] = Complex64::new(1.0, 0.0);
            let col = self.apply(&e);
            for i in 0..dim {
                h[(i, j)] = col[i];
            }
            e[j] = Complex64::default();
        }
        Ok(linalg::hermitian_part(h.as_ref()))
    }

    /// e^{−itH}χ(H) by dense diagonalization.
    pub fn dense_function(&self, t: f64) -> Result<CMat> {
        let h = self.dense_hamiltonian()?;
        let (vals, vecs) = linalg::hermitian_eigen(h.as_ref())?;
        let dim = vals.len();
        let scaled = Mat::from_fn(dim, dim, |i, j| vecs[(i, j)] * Complex64::from_polar(self.cutoff.chi(vals[j]), -t * vals[j]));
        Ok(&scaled * vecs.adjoint())
    }
}

/// e^{−itH}χ(H)(x, y) on a fresh lattice for a single time.
pub fn oracle_evolution(
    t: f64,
    spec: &PotentialSpec,
    cutoff: CutoffSpec,
    opts: LatticeOptions,
    xs: &[Point2],
    ys: &[Point2],
) -> Result<EvolutionKernel> {
    let lat = LatticePropagator::new(spec, cutoff, opts)?;
    Ok(lat.evolve(&[t], xs, ys)?.remove(0))
}
