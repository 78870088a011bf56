//! `gsm-tail`: fit gamma shape mixtures to positive data and estimate
//! exceedance probabilities.
//!
//! Exit codes: 0 success, 1 numeric or runtime failure, 2 data error,
//! 3 configuration or usage error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gsm_core::calibrate::DEFAULT_OMEGA;
use gsm_core::inference::DEFAULT_LEVEL;
use gsm_core::Transform;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "gsm-tail", version, about = "Gamma shape mixture fitting and tail-probability estimation")]
struct Cli {
    /// Seed overriding the one in the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for `simulate` (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the Gibbs sampler on a data file.
    Fit {
        /// Single-column CSV of positive values.
        data: PathBuf,
        /// JSON fit configuration.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate P(Y > k) from the draws written by `fit`.
    Tail {
        /// draws.json from `fit`; the transform is read from the manifest beside it.
        draws: PathBuf,
        /// Thresholds in original data units, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        k: Vec<f64>,
        /// File with one threshold per line.
        #[arg(long)]
        k_file: Option<PathBuf>,
        /// Credible level of the equal-tailed interval.
        #[arg(long, default_value_t = DEFAULT_LEVEL)]
        level: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print calibrated hyperparameters as JSON.
    Calibrate {
        data: PathBuf,
        #[arg(long = "J")]
        n_components: usize,
        #[arg(long, default_value_t = DEFAULT_OMEGA)]
        omega: f64,
        #[arg(long, default_value = "identity")]
        transform: Transform,
    },
    /// Run the replicated train/test comparison.
    Simulate {
        /// Single-column CSV population.
        #[arg(long, conflicts_with = "generator")]
        population: Option<PathBuf>,
        /// JSON generator specification.
        #[arg(long)]
        generator: Option<PathBuf>,
        /// JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write plot data for checking a fit.
    Diagnose {
        draws: PathBuf,
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit { data, config, out } => commands::fit::run(&data, &config, &out, cli.seed),
        Command::Tail {
            draws,
            k,
            k_file,
            level,
            out,
        } => commands::tail::run(&commands::tail::TailArgs {
            draws,
            k,
            k_file,
            level,
            out,
        }),
        Command::Calibrate {
            data,
            n_components,
            omega,
            transform,
        } => commands::calibrate::run(&data, n_components, omega, transform),
        Command::Simulate {
            population,
            generator,
            config,
            out,
        } => commands::simulate::run(&commands::simulate::SimulateArgs {
            population,
            generator,
            config,
            out,
            seed: cli.seed,
            jobs: cli.jobs,
        }),
        Command::Diagnose { draws, data, out } => {
            commands::diagnose::run(&commands::diagnose::DiagnoseArgs { draws, data, out })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GSM_TAIL_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    if cli.jobs == Some(0) {
        eprintln!("error: {}", CliError::Config("--jobs must be positive".into()));
        return ExitCode::from(3);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
