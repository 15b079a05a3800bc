use std::path::{Path, PathBuf};

use dirac2d::decay::geometric_times;
use dirac2d::discretize::{GridSpec, PotentialSpec};
use dirac2d::propagator::{ContourParams, LatticeOptions};
use dirac2d::threshold::{Tolerances, TuneOptions};
use dirac2d::{CutoffSpec, Point2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub t_min: f64,
    pub t_max: f64,
    /// Ratio of the geometric t-grid.
    pub t_ratio: f64,
    pub gammas: Vec<f64>,
    /// Also report e^{−itH}χ(H)P_ac − F_t when a p-wave resonance is present.
    pub subtract_ft: bool,
    /// Row points lie on the ray x₂ = 0, x₁ ∈ [0, 1.25·t_max + 20].
    pub ray_step: f64,
    /// Column points.
    pub sources: Vec<[f64; 2]>,
    /// Write one kernel snapshot per t.
    pub snapshots: bool,
    /// Times of the lattice cross-check; empty disables it.
    pub oracle_times: Vec<f64>,
    pub oracle_ray: f64,
    pub oracle_sources: Vec<[f64; 2]>,
    pub lattice: LatticeOptions,
    /// sup|F_t| is sampled on a geometric grid over this range.
    pub ft_range: [f64; 2],
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            t_min: 4.0,
            t_max: 256.0,
            t_ratio: 2.0,
            gammas: vec![0.0, 1.0],
            subtract_ft: true,
            ray_step: 0.5,
            sources: vec![[0.0, 0.0], [1.5, 0.0], [0.0, 3.0], [-2.0, 2.0]],
            snapshots: true,
            oracle_times: Vec::new(),
            oracle_ray: 24.0,
            oracle_sources: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [-2.0, 2.0]],
            lattice: LatticeOptions::default(),
            ft_range: [10.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub crossing: usize,
    pub tol: f64,
    pub scan_points: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        let o = TuneOptions::default();
        Self { s_min: 0.1, s_max: 10.0, crossing: o.crossing, tol: o.tol, scan_points: o.scan_points }
    }
}

impl TuneConfig {
    pub fn options(&self) -> TuneOptions {
        TuneOptions { crossing: self.crossing, tol: self.tol, scan_points: self.scan_points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreeConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub t_ratio: f64,
    pub gammas: Vec<f64>,
    pub r_step: f64,
}

impl Default for FreeConfig {
    fn default() -> Self {
        Self { t_min: 4.0, t_max: 256.0, t_ratio: 2.0, gammas: vec![0.0, 1.5], r_step: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    pub cutoff: CutoffSpec,
    pub contour: ContourParams,
    pub tolerances: Tolerances,
    pub evolve: EvolveConfig,
    pub tune: TuneConfig,
    pub free: FreeConfig,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: PotentialSpec::attractive_gaussian(0.5, 2.0),
            grid: GridSpec::default(),
            cutoff: CutoffSpec::default(),
            contour: ContourParams::default(),
            tolerances: Tolerances::default(),
            evolve: EvolveConfig::default(),
            tune: TuneConfig::default(),
            free: FreeConfig::default(),
            output: PathBuf::from("out"),
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(msg.to_string()))
    }
}

fn time_count(t0: f64, t1: f64, ratio: f64) -> usize {
    geometric_times(t0, t1, ratio).map_or(0, |v| v.len())
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.potential.validate().map_err(|e| ConfigError(e.to_string()))?;
        check(self.grid.n_per_axis >= 8, "grid.n_per_axis must be at least 8")?;
        check(positive(self.grid.half_width), "grid.half_width must be > 0")?;
        check(self.grid.stretch.is_finite() && self.grid.stretch >= 0.0, "grid.stretch must be >= 0")?;
        check(positive(self.cutoff.lambda1), "cutoff.lambda1 must be > 0")?;
        let e = &self.evolve;
        check(positive(e.t_min) && e.t_max >= e.t_min && e.t_ratio > 1.0, "evolve t-grid must satisfy 0 < t_min <= t_max, ratio > 1")?;
        check(time_count(e.t_min, e.t_max, e.t_ratio) >= 5, "evolve t-grid needs at least 5 times for a decay fit")?;
        check(e.gammas.iter().all(|g| g.is_finite() && *g >= 0.0), "evolve.gammas must be >= 0")?;
        check(positive(e.ray_step), "evolve.ray_step must be > 0")?;
        check(!e.sources.is_empty(), "evolve.sources must be non-empty")?;
        check(e.oracle_times.iter().all(|t| t.is_finite()), "evolve.oracle_times must be finite")?;
        check(positive(e.ft_range[0]) && e.ft_range[1] > e.ft_range[0], "evolve.ft_range must be increasing and positive")?;
        let f = &self.free;
        check(positive(f.t_min) && f.t_max >= f.t_min && f.t_ratio > 1.0, "free t-grid must satisfy 0 < t_min <= t_max, ratio > 1")?;
        check(time_count(f.t_min, f.t_max, f.t_ratio) >= 5, "free t-grid needs at least 5 times for a decay fit")?;
        check(f.gammas.iter().all(|g| g.is_finite() && *g >= 0.0), "free.gammas must be >= 0")?;
        check(positive(f.r_step), "free.r_step must be > 0")?;
        check(positive(self.tune.s_min) && self.tune.s_max > self.tune.s_min, "tune range must satisfy 0 < s_min < s_max")?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&Self { output: PathBuf::new(), ..self.clone() }).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn points(v: &[[f64; 2]]) -> Vec<Point2> {
    v.iter().map(|p| Point2::new(p[0], p[1])).collect()
}
