#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use dirac2d::discretize::{build_grid, Grid2, PotentialSpec};
use dirac2d::threshold::{tune_coupling, ThresholdAnalysis, Tolerances, TuneOptions};

pub const WIDTH: f64 = 2.0;
pub const HALF_WIDTH: f64 = 12.0;

pub fn gaussian(s: f64) -> PotentialSpec {
    PotentialSpec::attractive_gaussian(s, WIDTH)
}

pub fn grid(n: usize) -> Arc<Grid2> {
    build_grid(n, HALF_WIDTH).unwrap()
}

/// Tuned Gaussian at the given crossing (0: p-wave pair, 1: eigenvalue pair).
pub fn tuned(n: usize, crossing: usize) -> ThresholdAnalysis {
    let opts = TuneOptions { crossing, ..TuneOptions::default() };
    tune_coupling(&gaussian(1.0), &grid(n), (0.5, 4.0), opts).unwrap().analysis
}

pub fn p_wave() -> &'static Arc<ThresholdAnalysis> {
    static A: OnceLock<Arc<ThresholdAnalysis>> = OnceLock::new();
    A.get_or_init(|| Arc::new(tuned(20, 0)))
}

pub fn eigen() -> &'static Arc<ThresholdAnalysis> {
    static A: OnceLock<Arc<ThresholdAnalysis>> = OnceLock::new();
    A.get_or_init(|| Arc::new(tuned(20, 1)))
}

pub fn regular() -> &'static Arc<ThresholdAnalysis> {
    static A: OnceLock<Arc<ThresholdAnalysis>> = OnceLock::new();
    A.get_or_init(|| Arc::new(ThresholdAnalysis::new(&gaussian(0.5), &grid(20), Tolerances::default()).unwrap()))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
