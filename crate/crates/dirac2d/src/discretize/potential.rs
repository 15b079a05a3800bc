use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Grid2;
use crate::error::{Error, Result};
use crate::freeops::{bracket, Block, Point2};

/// Hermitian 2×2 amplitude stored as real parameters:
/// [[a11, a12_re + i a12_im], [conj, a22]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianAmplitude {
    pub a11: f64,
    pub a22: f64,
    #[serde(default)]
    pub a12_re: f64,
    #[serde(default)]
    pub a12_im: f64,
}

impl HermitianAmplitude {
    pub fn scalar(a: f64) -> Self {
        Self { a11: a, a22: a, a12_re: 0.0, a12_im: 0.0 }
    }

    pub fn block(&self) -> Block {
        let off = Complex64::new(self.a12_re, self.a12_im);
        Block::new(self.a11.into(), off, off.conj(), self.a22.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialFamily {
    Zero,
    /// A·exp(−|x|²/w²)
    Gaussian { amplitude: HermitianAmplitude, width: f64 },
    /// A·⟨x⟩^{−β}
    PolynomialDecay { amplitude: HermitianAmplitude, beta_decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(flatten)]
    pub family: PotentialFamily,
    #[serde(default = "unit_coupling")]
    pub coupling: f64,
}

fn unit_coupling() -> f64 {
    1.0
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self { family: PotentialFamily::Zero, coupling: 1.0 }
    }

    /// Scalar Gaussian −s·exp(−|x|²/w²)·I.
    pub fn attractive_gaussian(s: f64, width: f64) -> Self {
        Self {
            family: PotentialFamily::Gaussian { amplitude: HermitianAmplitude::scalar(-1.0), width },
            coupling: s,
        }
    }

    pub fn with_coupling(mut self, s: f64) -> Self {
        self.coupling = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.coupling.is_finite() {
            return Err(Error::Validation("coupling must be finite".into()));
        }
        match self.family {
            PotentialFamily::Zero => {}
            PotentialFamily::Gaussian { amplitude, width } => {
                check_amplitude(amplitude)?;
                if !(width.is_finite() && width > 0.0) {
                    return Err(Error::Validation(format!("Gaussian width must be > 0, got {width}")));
                }
            }
            PotentialFamily::PolynomialDecay { amplitude, beta_decay } => {
                check_amplitude(amplitude)?;
                if !(beta_decay.is_finite() && beta_decay > 0.0) {
                    return Err(Error::Validation(format!("beta_decay must be > 0, got {beta_decay}")));
                }
            }
        }
        Ok(())
    }

    pub fn value_at(&self, p: Point2) -> Block {
        match self.family {
            PotentialFamily::Zero => Block::ZERO,
            PotentialFamily::Gaussian { amplitude, width } => {
                let r2 = p.x1 * p.x1 + p.x2 * p.x2;
                amplitude.block() * (self.coupling * (-r2 / (width * width)).exp())
            }
            PotentialFamily::PolynomialDecay { amplitude, beta_decay } => {
                amplitude.block() * (self.coupling * bracket(p).powf(-beta_decay))
            }
        }
    }

    /// Decay exponent β with |V(x)| ≲ ⟨x⟩^{−β}; infinite for Gaussians.
    pub fn decay_exponent(&self) -> f64 {
        match self.family {
            PotentialFamily::PolynomialDecay { beta_decay, .. } => beta_decay,
            _ => f64::INFINITY,
        }
    }

    /// Radius beyond which |V| < tol.
    pub fn support_radius(&self, tol: f64) -> f64 {
        let amp = match self.family {
            PotentialFamily::Zero => return 0.0,
            PotentialFamily::Gaussian { amplitude, .. } | PotentialFamily::PolynomialDecay { amplitude, .. } => {
                amplitude.block().norm() * self.coupling.abs()
            }
        };
        if amp <= tol {
            return 0.0;
        }
        match self.family {
            PotentialFamily::Gaussian { width, .. } => width * (amp / tol).ln().sqrt(),
            PotentialFamily::PolynomialDecay { beta_decay, .. } => (amp / tol).powf(1.0 / beta_decay),
            PotentialFamily::Zero => 0.0,
        }
    }

    /// True when V(x) = f(|x|)·I, so the angular-channel oracle applies.
    pub fn radial_scalar_profile(&self) -> Option<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        let s = self.coupling;
        match self.family {
            PotentialFamily::Zero => Some(Box::new(|_| 0.0)),
            PotentialFamily::Gaussian { amplitude: a, width } if is_scalar(a) => {
                Some(Box::new(move |r| s * a.a11 * (-r * r / (width * width)).exp()))
            }
            PotentialFamily::PolynomialDecay { amplitude: a, beta_decay } if is_scalar(a) => {
                Some(Box::new(move |r| s * a.a11 * (1.0 + r * r).powf(-beta_decay / 2.0)))
            }
            _ => None,
        }
    }
}

fn is_scalar(a: HermitianAmplitude) -> bool {
    a.a11 == a.a22 && a.a12_re == 0.0 && a.a12_im == 0.0
}

fn check_amplitude(a: HermitianAmplitude) -> Result<()> {
    if [a.a11, a.a22, a.a12_re, a.a12_im].iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation("potential amplitude must be finite".into()))
    }
}

/// Pointwise factorization V = v*Uv on the grid nodes.
#[derive(Debug, Clone)]
pub struct FactoredPotential {
    pub v: Vec<Block>,
    /// Diagonal of U, entries in {−1, +1}.
    pub u: Vec<[f64; 2]>,
    pub potential: Vec<Block>,
    pub spec: PotentialSpec,
}

impl FactoredPotential {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn v_adjoint(&self) -> Vec<Block> {
        self.v.iter().map(Block::adjoint).collect()
    }

    pub fn u_blocks(&self) -> Vec<Block> {
        self.u.iter().map(|u| Block::diag(u[0].into(), u[1].into())).collect()
    }

    /// U with entry signs uniform across all nodes, if so.
    pub fn uniform_signature(&self) -> Option<[f64; 2]> {
        let first = *self.u.first()?;
        let uniform = self.u.iter().all(|u| *u == first);
        (uniform && first[0] == first[1]).then_some(first)
    }

    /// max_k ‖v_k* U_k v_k − V_k‖.
    pub fn reconstruction_error(&self) -> f64 {
        self.v
            .iter()
            .zip(&self.u)
            .zip(&self.potential)
            .map(|((v, u), p)| (v.adjoint() * Block::diag(u[0].into(), u[1].into()) * *v - *p).max_abs())
            .fold(0.0, f64::max)
    }
}

/// Factor one Hermitian block: V = B* diag(ζ) B with B unitary, then
/// v = diag(|ζ|^{1/2}) B and U = diag(sign ζ), sign 0 := +1.
pub fn factor_block(v: &Block) -> Result<(Block, [f64; 2])> {
    let scale = v.max_abs();
    if !v.is_finite() || !v.is_hermitian(1e-12 * scale.max(1e-300)) {
        return Err(Error::Validation("potential sample is not Hermitian".into()));
    }
    if scale == 0.0 {
        return Ok((Block::ZERO, [1.0, 1.0]));
    }
    let a = v[(0, 0)].re;
    let d = v[(1, 1)].re;
    let b = v[(0, 1)];
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let rad = half.hypot(b.norm());
    let zeta = [mean - rad, mean + rad];
    // Orthonormal eigenvectors as rows of B (B V B* = diag ζ).
    let rows: [[Complex64; 2]; 2] = if b.norm() <= 1e-300 {
        if a <= d {
            [[1.0.into(), 0.0.into()], [0.0.into(), 1.0.into()]]
        } else {
            [[0.0.into(), 1.0.into()], [1.0.into(), 0.0.into()]]
        }
    } else {
        let mut rows = [[Complex64::default(); 2]; 2];
        for (k, z) in zeta.iter().enumerate() {
            // (V − ζ)e = 0 with e = (b, ζ − a)
            let e = [b, Complex64::new(z - a, 0.0)];
            let n = (e[0].norm_sqr() + e[1].norm_sqr()).sqrt();
            rows[k] = [(e[0] / n).conj(), (e[1] / n).conj()];
        }
        rows
    };
    let mut out = Block(rows);
    let mut u = [1.0; 2];
    for k in 0..2 {
        let eta = zeta[k].abs().sqrt();
        u[k] = if zeta[k] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..2 {
            out.0[k][c] *= eta;
        }
    }
    Ok((out, u))
}

pub fn factor_potential(spec: &PotentialSpec, grid: &Grid2) -> Result<FactoredPotential> {
    spec.validate()?;
    let potential: Vec<Block> = grid.nodes().iter().map(|&p| spec.value_at(p)).collect();
    factor_samples(*spec, potential)
}

pub(crate) fn factor_samples(spec: PotentialSpec, potential: Vec<Block>) -> Result<FactoredPotential> {
    let mut v = Vec::with_capacity(potential.len());
    let mut u = Vec::with_capacity(potential.len());
    for p in &potential {
        let (vk, uk) = factor_block(p)?;
        v.push(vk);
        u.push(uk);
    }
    Ok(FactoredPotential { v, u, potential, spec })
}
