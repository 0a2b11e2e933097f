//! Command line front end: example runs, individual artifact commands,
//! and the diagnostics suite. Exit codes: 0 success, 1 configuration
//! error, 2 numerical or I/O failure.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod config;
mod diagnostics;
mod runs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, PartialConfig, SystemId};
use runs::RunPlan;

#[derive(Debug, Clone)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn config(message: String) -> Self {
        CliError::Config(message)
    }

    pub fn numerical(message: String) -> Self {
        CliError::Numerical(message)
    }

    /// Core errors reaching the CLI happen while solving, not while
    /// reading configuration.
    pub fn from_core(e: levyslow_core::Error) -> Self {
        CliError::Numerical(e.to_string())
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => m,
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "levyslow",
    version,
    about = "Random slow manifolds for alpha-stable fast-slow systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full artifact set for the self-amplifying example (J = +1)
    Example1(RunArgs),
    /// Full artifact set for the contracting example (J = -1)
    Example2(RunArgs),
    /// Manifold graph CSVs over the y0 grid, one file per seed
    Manifold(RunArgs),
    /// Exponential tracking report for one off-manifold start
    Tracking(RunArgs),
    /// Defect of the order-0/1 expansions over the epsilon sweep
    ApproxOrder(RunArgs),
    /// Config-scaled invariant suite; failures are reported, not fatal
    Diagnostics(RunArgs),
    /// Forward integration of the configured system from a fixed start
    Simulate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with configuration keys; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Spatial exponent; noise indices follow unless pinned in the file
    #[arg(long)]
    alpha: Option<f64>,
    /// Single seed replacing the configured seed list
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    /// Number of spectral modes
    #[arg(long)]
    modes: Option<usize>,
}

impl RunArgs {
    fn resolve(&self, system: Option<SystemId>) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            Some(path) => PartialConfig::from_toml_file(path)?,
            None => PartialConfig::default(),
        };
        let flags = PartialConfig {
            system,
            alpha: self.alpha,
            epsilon: self.epsilon,
            dt: self.dt,
            n_modes: self.modes,
            seeds: self.seed.map(|s| vec![s]),
            out_dir: self.out.clone(),
            ..PartialConfig::default()
        };
        ExperimentConfig::resolve(SystemId::Example2, file, flags)
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    let full = RunPlan {
        graph: true,
        tracking: true,
        approx: true,
        simulate: false,
    };
    let only = |graph, tracking, approx, simulate| RunPlan {
        graph,
        tracking,
        approx,
        simulate,
    };
    match command {
        Command::Example1(args) => {
            runs::execute(&args.resolve(Some(SystemId::Example1))?, &full)
        }
        Command::Example2(args) => {
            runs::execute(&args.resolve(Some(SystemId::Example2))?, &full)
        }
        Command::Manifold(args) => {
            runs::execute(&args.resolve(None)?, &only(true, false, false, false))
        }
        Command::Tracking(args) => {
            runs::execute(&args.resolve(None)?, &only(false, true, false, false))
        }
        Command::ApproxOrder(args) => {
            runs::execute(&args.resolve(None)?, &only(false, false, true, false))
        }
        Command::Simulate(args) => {
            runs::execute(&args.resolve(None)?, &only(false, false, false, true))
        }
        Command::Diagnostics(args) => diagnostics::run(&args.resolve(None)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
