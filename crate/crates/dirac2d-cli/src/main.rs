//! `dirac2d`: threshold classification, low-energy evolution and decay
//! studies driven by a TOML run configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Run};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "dirac2d", version, about = "Low-energy toolkit for the massless 2D Dirac operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration (defaults are used for missing keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Single-threaded, bit-reproducible run.
    #[arg(long, global = true)]
    serial: bool,
    #[arg(long = "grid-n", global = true, allow_negative_numbers = true)]
    grid_n: Option<usize>,
    #[arg(long = "grid-L", global = true, allow_negative_numbers = true)]
    grid_l: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda1: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Classify the zero-energy threshold and dump the S1 basis.
    Classify,
    /// Low-energy evolution kernels, decay fits and optional oracle check.
    Evolve,
    /// Find the coupling at which the threshold becomes non-regular.
    Tune,
    /// Decay fits for the free evolution.
    FreeCheck,
    /// Fast internal consistency checks.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Evolve => "evolve",
            Command::Tune => "tune",
            Command::FreeCheck => "free-check",
            Command::Selftest => "selftest",
        }
    }
}

fn configure(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(n) = cli.grid_n {
        cfg.grid.n_per_axis = n;
    }
    if let Some(l) = cli.grid_l {
        cfg.grid.half_width = l;
    }
    if let Some(l) = cli.lambda1 {
        cfg.cutoff.lambda1 = l;
    }
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = configure(cli)?;
    if cli.serial {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build_global()
            .map_err(|e| Failure::Check(format!("thread pool: {e}")))?;
    }
    let mut run = Run::new(&cfg, cli.serial)?;
    match cli.command {
        Command::Classify => commands::classify(&mut run)?,
        Command::Evolve => commands::evolve(&mut run)?,
        Command::Tune => commands::tune(&mut run)?,
        Command::FreeCheck => commands::free_check(&mut run)?,
        Command::Selftest => commands::selftest(&mut run)?,
    }
    run.finish(cli.command.name())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("dirac2d {}: {}", cli.command.name(), f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
