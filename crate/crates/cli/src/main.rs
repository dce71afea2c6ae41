//! `qnir`: generate benchmark tasks, run and optimize noise-driven quantum
//! reservoirs, and measure their memory capacity.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qnir::reservoir::EntanglementScheme;

use config::{ExperimentConfig, OptimizerKind, Overrides};
use error::{CliError, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "qnir", version, about = "Quantum noise-induced reservoir computing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON experiment config; flags override its keys
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// narma2 | narma5 | narma10 | mg19 | mg25
    #[arg(long, global = true, value_name = "NAME")]
    task: Option<String>,
    #[arg(long, global = true, value_parser = parse_scheme, value_name = "ps|le")]
    scheme: Option<EntanglementScheme>,
    #[arg(long, global = true, value_name = "N")]
    qubits: Option<usize>,
    #[arg(long, global = true, value_enum)]
    optimizer: Option<OptimizerKind>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a benchmark task as CSV plus a JSON sidecar
    Generate {
        /// Number of samples
        #[arg(long)]
        len: Option<usize>,
    },
    /// Simulate once with given (or seeded random) noise and score the readout
    Run {
        /// Noise probabilities JSON
        #[arg(long, value_name = "PATH")]
        params: Option<PathBuf>,
        /// Task CSV written by `generate`
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Optimize the reset-noise probabilities
    Optimize {
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Memory function and capacity of an optimized reservoir
    Mc {
        /// Noise probabilities JSON (default: OUT/params.json)
        #[arg(long, value_name = "PATH")]
        params: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        max_delay: Option<usize>,
    },
    /// Summarize metrics written to the output directory
    Report,
}

fn parse_scheme(s: &str) -> Result<EntanglementScheme, String> {
    s.parse().map_err(|e: qnir::QnirError| e.to_string())
}

fn threads_from_env() -> Result<(), CliError> {
    let Ok(value) = std::env::var("QNIR_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("QNIR_THREADS must be a positive integer, got `{value}`")))?;
    qnir::parallel::configure_threads(n).map_err(CliError::usage)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    threads_from_env()?;
    let g = cli.global;
    let mut o = Overrides {
        task: g.task,
        scheme: g.scheme,
        qubits: g.qubits,
        optimizer: g.optimizer,
        seed: g.seed,
        out: g.out,
        ..Default::default()
    };
    let mut input = None;
    match &cli.command {
        Command::Generate { len } => o.len = *len,
        Command::Run { params, input: i } => {
            o.params = params.clone();
            input = i.clone();
        }
        Command::Optimize { input: i } => input = i.clone(),
        Command::Mc {
            params,
            trials,
            max_delay,
        } => {
            o.params = params.clone();
            o.trials = *trials;
            o.max_delay = *max_delay;
        }
        Command::Report => {}
    }
    let mut cfg = ExperimentConfig::load(g.config.as_deref())?;
    if input.is_some() {
        cfg.task.file = input;
    }
    let cfg = cfg.resolve(o)?;
    match cli.command {
        Command::Generate { .. } => commands::generate(&cfg),
        Command::Run { .. } => commands::run(&cfg),
        Command::Optimize { .. } => commands::optimize(&cfg),
        Command::Mc { .. } => commands::mc(&cfg),
        Command::Report => commands::report(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
