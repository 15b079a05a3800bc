//! Low-energy evolution kernels e^{−itH}χ(H)P_ac(x, y) and their checks.

mod channel;
mod contour;
mod free;
mod lattice;
mod stone;

use std::fmt;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use channel::{channel_density, ChannelOptions};
pub use contour::{model_integral, ContourParams, LambdaContour};
pub use free::{
    free_evolution, free_evolution_half_period, free_evolution_on, free_kernel_parts, free_weighted_sup, parts_norm,
    split_weight,
};
pub use lattice::{oracle_evolution, LatticeOptions, LatticePropagator};
pub use stone::{compute_ft, evolve_low, resolvent_correction, spectral_density, LowEnergyPropagator};

use crate::discretize::KernelSamples;
use crate::freeops::Point2;
use crate::linalg::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Stone's formula with the symmetric resolvent identity.
    StoneLowEnergy,
    /// Stone's formula with F_t removed.
    StoneMinusFt,
    /// First three terms of the resolvent identity only.
    BornThreeTerm,
    /// Free kernel.
    Free,
    /// Periodic-lattice functional-calculus oracle.
    OracleFull,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::StoneLowEnergy => "stone_low_energy",
            Provenance::StoneMinusFt => "stone_minus_ft",
            Provenance::BornThreeTerm => "born_three_term",
            Provenance::Free => "free",
            Provenance::OracleFull => "oracle_full",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionKernel {
    pub t: f64,
    pub provenance: Provenance,
    pub samples: KernelSamples,
}

impl EvolutionKernel {
    pub fn weighted_supnorm(&self, gamma: f64) -> f64 {
        self.samples.weighted_supnorm(gamma)
    }
}

/// The finite-rank p-wave term F_t = O_X C(t) O_Y sampled at point pairs.
#[derive(Debug, Clone)]
pub struct FiniteRankTerm {
    pub t: f64,
    pub samples: KernelSamples,
    /// rank S₁ (the inner dimension of the factorization)
    pub rank: usize,
}

impl FiniteRankTerm {
    fn new(t: f64, xs: &[Point2], ys: &[Point2], m: CMat, rank: usize) -> Self {
        Self { t, samples: KernelSamples::from_matrix(xs.to_vec(), ys.to_vec(), m.as_ref()), rank }
    }

    pub fn zero(t: f64, xs: &[Point2], ys: &[Point2]) -> Self {
        Self::new(t, xs, ys, Mat::<Complex64>::zeros(2 * xs.len(), 2 * ys.len()), 0)
    }

    pub fn weighted_supnorm(&self, gamma: f64) -> f64 {
        self.samples.weighted_supnorm(gamma)
    }
}
