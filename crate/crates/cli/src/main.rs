//! `sphere-fda` command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or options,
//! 3 an optimizer stopped at its iteration cap (output is still written).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
        }
    }
}

impl From<sphere_fda::io::DataError> for CliError {
    fn from(e: sphere_fda::io::DataError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<sphere_fda::Error> for CliError {
    fn from(e: sphere_fda::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// Whether every optimizer involved stopped on its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    NotConverged,
}

impl Outcome {
    pub fn from_flag(converged: bool) -> Self {
        if converged {
            Outcome::Converged
        } else {
            Outcome::NotConverged
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "sphere-fda", version, about = "Elastic analysis of trajectories on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// key=value file applied before the flags
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Number of uniform samples per curve
    #[arg(long, value_name = "T")]
    grid: Option<usize>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Output file, or directory for `simulate`
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Geodesic between two curves
    Geodesic {
        curve_a: PathBuf,
        curve_b: PathBuf,
        /// Also optimize over reparametrizations of the first curve
        #[arg(long)]
        amplitude: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Sample Fréchet mean
    Mean {
        #[arg(required = true)]
        curves: Vec<PathBuf>,
        #[arg(long)]
        amplitude: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Pairwise squared distances
    Distmat {
        #[arg(required = true)]
        curves: Vec<PathBuf>,
        #[arg(long)]
        amplitude: bool,
        /// Also run the discretized baseline with N segments and M tilts
        #[arg(long, num_args = 2, value_names = ["N", "M"])]
        baseline: Option<Vec<usize>>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate curves around random means with phase variability
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Tangent-space covariance around the sample mean
    Covariance {
        #[arg(required = true)]
        curves: Vec<PathBuf>,
        /// Remove phase variability before estimating
        #[arg(long)]
        aligned: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn configure(common: &Common, apply: impl FnOnce(&mut RunConfig)) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.load_file(path)?;
    }
    if let Some(t) = common.grid {
        cfg.grid = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Geodesic { curve_a, curve_b, amplitude, common } => {
            let cfg = configure(&common, |c| c.amplitude |= amplitude)?;
            commands::geodesic(&curve_a, &curve_b, &cfg)
        }
        Command::Mean { curves, amplitude, common } => {
            let cfg = configure(&common, |c| c.amplitude |= amplitude)?;
            commands::mean(&curves, &cfg)
        }
        Command::Distmat { curves, amplitude, baseline, common } => {
            let cfg = configure(&common, |c| {
                c.amplitude |= amplitude;
                if let Some(b) = baseline {
                    c.baseline = Some((b[0], b[1]));
                }
            })?;
            commands::distmat(&curves, &cfg)
        }
        Command::Simulate { common } => commands::simulate(&configure(&common, |_| {})?),
        Command::Covariance { curves, aligned, common } => {
            let cfg = configure(&common, |c| c.aligned |= aligned)?;
            commands::covariance(&curves, &cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Converged) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => {
            eprintln!("warning: an optimizer reached its iteration cap; results were written");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
