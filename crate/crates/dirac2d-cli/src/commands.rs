use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::Arc;

use dirac2d::decay::{self, check_log_bounded, geometric_times, DecaySeries};
use dirac2d::discretize::{Grid2, KernelSamples};
use dirac2d::propagator::{
    compute_ft, free_evolution, free_weighted_sup, LambdaContour, LatticePropagator, LowEnergyPropagator,
};
use dirac2d::threshold::{tune_coupling, Classification, ThresholdAnalysis, ThresholdReport};
use dirac2d::{Error, Point2};
use serde::Serialize;

use crate::config::{points, ConfigError, RunConfig};

pub enum Failure {
    Config(String),
    Numerics(Error),
    Io(std::io::Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => Failure::Io(e),
            Error::Validation(m) => Failure::Config(m),
            e => Failure::Numerics(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerics(e) => match e {
                Error::Resolution(_)
                | Error::Causality(_)
                | Error::IllConditioned { .. }
                | Error::LambdaTooLarge(_)
                | Error::Singular(_) => 3,
                Error::AmbiguousKernel { .. } => 4,
                _ => 1,
            },
            Failure::Io(_) | Failure::Check(_) => 1,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("config error: {m}"),
            Failure::Numerics(e) => e.to_string(),
            Failure::Io(e) => format!("i/o error: {e}"),
            Failure::Check(m) => m.clone(),
        }
    }
}

pub type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_sha256: String,
    config: &'a RunConfig,
    serial: bool,
    version: &'static str,
    outputs: Vec<String>,
}

/// Output directory plus the list of files written so far.
pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub serial: bool,
    dir: PathBuf,
    outputs: Vec<String>,
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a RunConfig, serial: bool) -> Result<Self, Failure> {
        fs::create_dir_all(&cfg.output)?;
        Ok(Self { cfg, serial, dir: cfg.output.clone(), outputs: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, body: &str) -> Outcome {
        let p = self.path(name);
        fs::write(p, body)?;
        Ok(())
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let p = self.path(name);
        Ok(BufWriter::new(File::create(p)?))
    }

    pub fn finish(mut self, command: &str) -> Outcome {
        self.outputs.sort();
        let m = Manifest {
            command,
            config_sha256: self.cfg.hash(),
            config: self.cfg,
            serial: self.serial,
            version: dirac2d::VERSION,
            outputs: self.outputs.clone(),
        };
        let body = serde_json::to_string_pretty(&m).expect("manifest serializes");
        fs::write(self.dir.join("manifest.json"), body + "\n")?;
        Ok(())
    }
}

fn grid(cfg: &RunConfig) -> Result<Arc<Grid2>, Failure> {
    Ok(Grid2::new(cfg.grid)?)
}

fn write_report(run: &mut Run, report: &ThresholdReport) -> Outcome {
    run.text("report.txt", &report.to_text())?;
    let w = run.create("basis_s1.snap")?;
    ThresholdReport::write_fields(&report.basis_s1, w, "basis_s1")?;
    let w = run.create("resonance_functions.snap")?;
    ThresholdReport::write_fields(&report.resonance_functions, w, "resonance_functions")?;
    Ok(())
}

pub fn classify(run: &mut Run) -> Outcome {
    let cfg = run.cfg;
    let g = grid(cfg)?;
    let report = ThresholdAnalysis::new(&cfg.potential, &g, cfg.tolerances)?.report()?;
    write_report(run, &report)?;
    println!(
        "classification = {} (rank S1 = {}, rank S2 = {})",
        report.classification, report.rank_s1, report.rank_s2
    );
    Ok(())
}

pub fn tune(run: &mut Run) -> Outcome {
    let cfg = run.cfg;
    let g = grid(cfg)?;
    let r = tune_coupling(&cfg.potential, &g, (cfg.tune.s_min, cfg.tune.s_max), cfg.tune.options())?;
    let mut s = String::new();
    let _ = writeln!(s, "s_star = {:.17e}", r.s_star);
    let _ = writeln!(s, "sigma_min = {:.6e}", r.sigma_min);
    let _ = writeln!(s, "crossings = {:?}", r.crossings);
    run.text("tune.txt", &s)?;
    let mut scan = String::from("s,sigma_min\n");
    for (a, b) in &r.scan {
        let _ = writeln!(scan, "{a:.17e},{b:.17e}");
    }
    run.text("scan.csv", &scan)?;
    write_report(run, &r.analysis.report()?)?;
    println!("s* = {:.12} (sigma_min = {:.3e})", r.s_star, r.sigma_min);
    Ok(())
}

fn gnuplot_stub(csv: &str, title: &str) -> String {
    format!(
        "# {title}\nset datafile separator ','\nset logscale xy\nset xlabel 't'\nset ylabel 'weighted sup-norm'\n\
         set key autotitle columnheader\nplot '{csv}' using 1:2 every ::1 with linespoints\n"
    )
}

fn fits_text(series: &[DecaySeries]) -> String {
    let mut s = String::new();
    for d in series {
        let _ = writeln!(
            s,
            "{} gamma = {} exponent = {:.4} stderr = {:.4}",
            d.provenance, d.gamma, d.fit_exponent, d.fit_stderr
        );
    }
    s
}

fn write_series(run: &mut Run, series: &[DecaySeries], title: &str) -> Outcome {
    let w = run.create("decay.csv")?;
    decay::write_csv(w, series)?;
    run.text("fits.txt", &fits_text(series))?;
    run.text("decay.gp", &gnuplot_stub("decay.csv", title))?;
    print!("{}", fits_text(series));
    Ok(())
}

pub fn free_check(run: &mut Run) -> Outcome {
    let cfg = run.cfg;
    let f = &cfg.free;
    let ts = geometric_times(f.t_min, f.t_max, f.t_ratio)?;
    let mut series = Vec::new();
    for &gamma in &f.gammas {
        let samples = ts
            .iter()
            .map(|&t| Ok((t, free_weighted_sup(t, gamma, cfg.cutoff, 1.5 * t + 20.0, f.r_step)?)))
            .collect::<Result<Vec<_>, Error>>()?;
        series.push(DecaySeries::new(gamma, "free", samples)?);
    }
    write_series(run, &series, "free evolution")
}

fn ray(step: f64, len: f64) -> Vec<Point2> {
    let n = (len / step).ceil() as usize;
    (0..=n).map(|k| Point2::new(k as f64 * step, 0.0)).collect()
}

fn contour_for(cfg: &RunConfig, analysis: &ThresholdAnalysis, t_max: f64, xs: &[Point2], ys: &[Point2]) -> Result<LambdaContour, Error> {
    let rv = cfg.potential.support_radius(1e-8).min(std::f64::consts::SQRT_2 * analysis.grid().half_width());
    let reach = |p: &[Point2]| p.iter().map(|q| q.norm()).fold(0.0, f64::max);
    LambdaContour::with_params(cfg.cutoff, t_max + reach(xs) + reach(ys) + 2.0 * rv, cfg.contour)
}

fn snapshot(run: &mut Run, name: &str, k: &KernelSamples, half_width: f64, tag: &str) -> Outcome {
    let w = run.create(name)?;
    k.write_snapshot(w, half_width, tag, 0.0)?;
    Ok(())
}

pub fn evolve(run: &mut Run) -> Outcome {
    let cfg = run.cfg;
    let e = &cfg.evolve;
    let g = grid(cfg)?;
    let analysis = Arc::new(ThresholdAnalysis::new(&cfg.potential, &g, cfg.tolerances)?);
    let class = analysis.classification();
    if class != Classification::Regular {
        if let Some(gm) = e.gammas.iter().find(|&&gm| gm >= 0.5) {
            return Err(Failure::Config(format!("gamma = {gm} is outside [0, 1/2) for a {class} threshold")));
        }
    } else {
        let beta = cfg.potential.decay_exponent();
        if let Some(gm) = e.gammas.iter().find(|&&gm| beta <= 2.0 + 2.0 * gm) {
            return Err(Failure::Config(format!("gamma = {gm} needs a potential decaying faster than <x>^-{}", 2.0 + 2.0 * gm)));
        }
    }
    run.text("report.txt", &analysis.report()?.to_text())?;
    let ts = geometric_times(e.t_min, e.t_max, e.t_ratio)?;
    let xs = ray(e.ray_step, 1.25 * e.t_max + 20.0);
    let ys = points(&e.sources);
    let contour = contour_for(cfg, &analysis, e.t_max, &xs, &ys)?;
    let prop = LowEnergyPropagator::new(analysis.clone(), cfg.cutoff, contour, &xs, &ys)?;
    let subtract = e.subtract_ft && analysis.rank_q() > 0;
    let mut full = vec![Vec::new(); e.gammas.len()];
    let mut minus = vec![Vec::new(); e.gammas.len()];
    for &t in &ts {
        let k = prop.evolve(t)?;
        for (s, &gm) in full.iter_mut().zip(&e.gammas) {
            s.push((t, k.weighted_supnorm(gm)));
        }
        if e.snapshots {
            snapshot(run, &format!("kernel_t{t:.3}.snap"), &k.samples, g.half_width(), k.provenance.name())?;
        }
        if subtract {
            let k = prop.evolve_minus_ft(t)?;
            for (s, &gm) in minus.iter_mut().zip(&e.gammas) {
                s.push((t, k.weighted_supnorm(gm)));
            }
        }
    }
    let mut series = Vec::new();
    for (s, &gm) in full.into_iter().zip(&e.gammas) {
        series.push(DecaySeries::new(gm, "stone_low_energy", s)?);
    }
    if subtract {
        for (s, &gm) in minus.into_iter().zip(&e.gammas) {
            series.push(DecaySeries::new(gm, "stone_minus_ft", s)?);
        }
    }
    write_series(run, &series, &format!("low-energy evolution ({class})"))?;

    if analysis.rank_q() > 0 {
        let ft_ts = geometric_times(e.ft_range[0], e.ft_range[1], 1.5)?;
        let xs_ft = ray(e.ray_step, 40.0);
        let c = LambdaContour::with_params(cfg.cutoff, e.ft_range[1], cfg.contour)?;
        let mut samples = Vec::with_capacity(ft_ts.len());
        for &t in &ft_ts {
            samples.push((t, compute_ft(&analysis, t, &xs_ft, &ys, cfg.cutoff, &c)?.weighted_supnorm(0.0)));
        }
        let v = check_log_bounded(&samples);
        let mut s = String::from("t,sup_ft\n");
        for (t, n) in &samples {
            let _ = writeln!(s, "{t:.6e},{n:.6e}");
        }
        run.text("ft.csv", &s)?;
        let line = format!("log-bounded ratio = {:.4} pass = {}\n", v.ratio, v.pass);
        run.text("ft_verdict.txt", &line)?;
        print!("F_t {line}");
    }

    if !e.oracle_times.is_empty() {
        oracle_check(run, &analysis)?;
    }
    Ok(())
}

fn oracle_check(run: &mut Run, analysis: &Arc<ThresholdAnalysis>) -> Outcome {
    let cfg = run.cfg;
    let e = &cfg.evolve;
    let xs = ray(1.0, e.oracle_ray);
    let ys = points(&e.oracle_sources);
    let t_max = e.oracle_times.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let contour = contour_for(cfg, analysis, t_max, &xs, &ys)?;
    let prop = LowEnergyPropagator::new(analysis.clone(), cfg.cutoff, contour, &xs, &ys)?;
    let lat = LatticePropagator::new(&cfg.potential, cfg.cutoff, e.lattice)?;
    let oracle = lat.evolve(&e.oracle_times, &xs, &ys)?;
    let mut s = String::new();
    for (o, &t) in oracle.iter().zip(&e.oracle_times) {
        let k = prop.evolve(t)?;
        for &gm in &e.gammas {
            let rel = k.samples.sub(&o.samples)?.weighted_supnorm(gm) / o.weighted_supnorm(gm);
            let _ = writeln!(s, "t = {t} gamma = {gm} relative weighted sup difference = {rel:.4e}");
        }
    }
    run.text("oracle.txt", &s)?;
    print!("{s}");
    Ok(())
}

pub fn selftest(run: &mut Run) -> Outcome {
    let cfg = run.cfg;
    let mut lines = String::new();
    let mut failed = 0;
    let mut record = |name: &str, ok: bool, detail: String| {
        let _ = writeln!(lines, "{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    };
    record("dirac algebra", dirac2d::freeops::dirac_algebra_check(), "alpha_j alpha_k + alpha_k alpha_j = 2 delta_jk".into());
    let x = Point2::new(2.0, -1.0);
    let y = Point2::new(-1.0, 0.5);
    let a = free_evolution(6.0, x, y, cfg.cutoff)?;
    let b = dirac2d::propagator::free_evolution_half_period(6.0, x, y, cfg.cutoff)?;
    let gap = (a - b).max_abs() / a.max_abs();
    record("free kernel routes", gap < 1e-6, format!("relative gap {gap:.2e}"));
    let small = Grid2::new(dirac2d::discretize::GridSpec { n_per_axis: 12, ..cfg.grid })?;
    let c = ThresholdAnalysis::new(&dirac2d::discretize::PotentialSpec::zero(), &small, cfg.tolerances)?.classification();
    record("V = 0 threshold", c == Classification::Regular, format!("classified {c}"));
    let ts = geometric_times(4.0, 256.0, 2.0)?;
    let syn: Vec<(f64, f64)> = ts.iter().map(|&t| (t, t.powf(-0.5))).collect();
    let (ex, _) = decay::fit_decay(&syn, 4.0, 256.0)?;
    record("decay fit", (ex + 0.5).abs() < 1e-12, format!("exponent {ex:.6}"));
    run.text("selftest.txt", &lines)?;
    print!("{lines}");
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}
