//! Command-line front end: model files in, JSON reports and CSV series out.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for input
//! or usage errors.

pub mod commands;
pub mod model;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use noetherq_core::classical::ClassicalError;
use noetherq_core::dynamics::DynamicsError;
use noetherq_core::noether::NoetherError;
use noetherq_core::quantum::QuantumError;
use thiserror::Error;

use crate::model::ModelError;
use crate::report::Report;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error(transparent)]
    Noether(#[from] NoetherError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Parser)]
#[command(name = "noetherq", version, about = "Noether charges and pure states of time-dependent Lagrangians")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Model file path or built-in name (bateman, harmonic, free_particle).
    #[arg(long, global = true, default_value = "bateman")]
    pub model: String,
    /// Seed for collocation sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for report.json and CSV files.
    #[arg(long, global = true, env = "NOETHERQ_OUT", default_value = ".")]
    pub out: PathBuf,
    /// Override a model parameter.
    #[arg(long = "set", global = true, value_name = "NAME=VALUE")]
    pub set: Vec<String>,
    /// Override the damping parameter named in the model's [quantum] section.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Pass threshold of the command's primary check.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// RK4 step.
    #[arg(long, global = true)]
    pub h: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t1: Option<f64>,
    /// Grid points.
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    /// Grid half-width in oscillator lengths.
    #[arg(long = "box", global = true)]
    pub box_half: Option<f64>,
    /// Finite-difference stencil (central4, central2).
    #[arg(long, global = true)]
    pub stencil: Option<String>,
    /// Null-space solver (svd, qr).
    #[arg(long, global = true)]
    pub nullspace: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equations of motion, energy, momenta, Hamiltonian and the lifted system.
    Derive,
    /// Solve the determining equations for symmetry generators.
    Noether(NoetherArgs),
    /// Integrate the equations of motion and monitor the charges.
    VerifyClassical,
    /// Check the analytic damped-oscillator states against the grid operators.
    VerifyQuantum(QuantumArgs),
    /// Run the full damped-oscillator pipeline.
    ReproducePaper(ReproduceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct NoetherArgs {
    /// Terms spanning ξ⁰, comma separated.
    #[arg(long)]
    pub xi0: Option<String>,
    /// Terms spanning ξ for one coordinate: `x=1,x,t` (or `1,x,t` with one coordinate).
    #[arg(long)]
    pub xi: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct QuantumArgs {
    /// Quantum numbers.
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2, 3, 4])]
    pub n: Vec<u32>,
    /// Sample times.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0])]
    pub t: Vec<f64>,
    /// Also propagate ψ_0 between the first and last time with Crank–Nicolson.
    #[arg(long)]
    pub cn: bool,
    #[arg(long, default_value_t = 1e-4)]
    pub cn_dt: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(long, hide = true)]
    pub corrupt_builtin: bool,
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    std::fs::create_dir_all(&cli.common.out).map_err(|source| CliError::Io {
        path: cli.common.out.clone(),
        source,
    })?;
    let report = match &cli.command {
        Command::Derive => commands::derive::run(&cli.common)?,
        Command::Noether(args) => commands::noether::run(&cli.common, args)?,
        Command::VerifyClassical => commands::classical::run(&cli.common)?,
        Command::VerifyQuantum(args) => commands::quantum::run(&cli.common, args)?,
        Command::ReproducePaper(args) => commands::reproduce::run(&cli.common, args)?,
    };
    let path = cli.common.out.join("report.json");
    report.write(&cli.common.out).map_err(|source| CliError::Io { path, source })?;
    Ok(report)
}

/// Runs the command, prints a summary, and returns the exit code.
pub fn execute(cli: &Cli) -> i32 {
    match run(cli) {
        Ok(report) => {
            print!("{}", report.summary());
            println!("report: {}", cli.common.out.join("report.json").display());
            if report.passed() {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}
