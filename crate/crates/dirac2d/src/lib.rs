//! Numerical toolkit for the massless two-dimensional Dirac operator
//! H = −iα·∇ + V with a Hermitian matrix potential: free kernels, Nyström
//! discretization, threshold classification, low-energy evolution kernels
//! and decay-rate fitting.

pub mod decay;
pub mod discretize;
pub mod error;
pub mod freeops;
pub mod linalg;
pub mod propagator;
pub mod specfun;
pub mod threshold;

pub use error::{Error, Result};

pub use freeops::{Block, CutoffSpec, Point2};
pub use num_complex::Complex64;
pub use specfun::Sign;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
