//! Grids, potential factorization V = v*Uv and Nyström assembly of the
//! integral operators as dense block matrices.

mod grid;
mod nystrom;
mod operator;
mod potential;

pub use grid::{build_grid, gauss_legendre, Grid2, GridSpec, DEFAULT_STRETCH};
pub use nystrom::{assemble, g00_rows, resolvent_matrix, EvaluationRows, KernelSpec, NearTables};
pub use operator::{
    operator_compose, read_snapshot, write_snapshot, BlockOperator, KernelSamples, Snapshot, SpinorField,
};
pub use potential::{
    factor_block, factor_potential, FactoredPotential, HermitianAmplitude, PotentialFamily, PotentialSpec,
};


use crate::freeops::bracket;

/// sup |K(x, y)| ⟨x⟩^{−γ}⟨y⟩^{−γ} over the sampled pairs.
pub fn weighted_supnorm(k: &KernelSamples, gamma: f64) -> f64 {
    k.weighted_supnorm(gamma)
}

/// ⟨p⟩^{−γ}
pub fn bracket_weight(p: crate::Point2, gamma: f64) -> f64 {
    bracket(p).powf(-gamma)
}
