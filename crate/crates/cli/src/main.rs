//! `diffusion`: simulate cascades, infer endogenous and exogenous
//! influence, and evaluate the attribution, driven by one JSON config.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod commands;
mod config;
mod plot;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Overrides};
use diffusion_core::ModelKind;

#[derive(Debug)]
pub enum CliError {
    /// Bad config file or flag value.
    Config(String),
    /// Failure while loading data, computing or writing outputs.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<diffusion_core::Error> for CliError {
    fn from(e: diffusion_core::Error) -> Self {
        match e {
            diffusion_core::Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "diffusion", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Correction strength for unobserved users.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Window width in minutes.
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Endogenous model: si, exp or log.
    #[arg(long, global = true)]
    model: Option<ModelKind>,

    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Comma-separated alpha values; `infer` fits once per value.
    #[arg(long, global = true, value_delimiter = ',')]
    alpha_sweep: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a cascade and write the graph, sessions and ground truth.
    Simulate,
    /// Fit the endogenous model and the exogenous series.
    Infer,
    /// Responsibility scores, ROC against referral labels, histograms and plots.
    Evaluate {
        /// Reuse a `result.json` written by `infer` instead of refitting.
        #[arg(long)]
        result: Option<PathBuf>,
    },
    /// Individual and collective influence.
    Influence {
        #[arg(long)]
        result: Option<PathBuf>,
    },
    /// Every step above into one output directory.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config: a config file is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply(&Overrides {
        seed: cli.seed,
        alpha: cli.alpha,
        dt: cli.dt,
        model: cli.model,
        out: cli.out.clone(),
        alpha_sweep: cli.alpha_sweep.clone(),
    });
    cfg.validate()?;

    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Config("--workers: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }

    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Runtime(format!("{}: {e}", cfg.out.display())))?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Infer => commands::infer(&cfg),
        Command::Evaluate { result } => commands::evaluate(&cfg, result.as_deref()),
        Command::Influence { result } => commands::influence(&cfg, result.as_deref()),
        Command::Report => commands::report(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
