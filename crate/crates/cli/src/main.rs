//! `epiclass` — command-line pipeline for the cutout classifier: generate
//! synthetic data, train, evaluate, and report.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;

use config::ConfigFile;

const EXIT_HELP: &str = "\
Exit status:
  0   success
  2   command-line usage error
  65  config or schema violation
  66  missing input file
  70  execution failure inside a pipeline stage

All randomness derives from the single master seed (--seed or the
config's master_seed; default 0); rerunning with the same config and
seed reproduces every report byte for byte.";

#[derive(Parser)]
#[command(
    name = "epiclass",
    version,
    about = "Low-complexity MLP pipeline for dysplastic-epithelium cutout classification",
    after_long_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Experiment config file (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for reports and artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for parallel realizations/folds (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Loss override as `L12,L21` (false-positive, false-negative loss).
    #[arg(long, global = true, value_name = "L12,L21", value_parser = parse_losses)]
    losses: Option<(f64, f64)>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic case set (PNG cutouts plus manifest).
    Synth,
    /// Train one network on all cases of the manifest.
    Train,
    /// Case-level leave-one-out cross-validation over realizations.
    Loocv,
    /// Train on the training cases, evaluate each realization on the
    /// held-out test cases, keep the model with the highest D.
    Holdout,
    /// Cutout-level holdout evaluation (no case voting).
    CutoutHoldout,
    /// Classify one cutout image with a serialized model.
    Classify {
        /// Serialized model file.
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Cutout image (PNG or binary PGM/PPM).
        #[arg(long, value_name = "PATH")]
        image: PathBuf,
    },
    /// Print the FLOP-cost table for one or more structures.
    Flops {
        /// Input width (number of input neurons).
        #[arg(long, value_name = "N")]
        input: Option<usize>,
        /// Hidden layer widths, comma separated (e.g. 150,150,150).
        #[arg(long, value_name = "W,W,...", value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        /// Cost function: cross_entropy (default) or mse.
        #[arg(long, value_name = "COST")]
        cost: Option<String>,
    },
    /// Summarize a completed run directory.
    Report {
        /// Run directory written by a previous command.
        #[arg(long, value_name = "DIR")]
        run: PathBuf,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    MissingInput(String),
    #[error("{0}")]
    Exec(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 65,
            CliError::MissingInput(_) => 66,
            CliError::Exec(_) => 70,
        }
    }
}

fn parse_losses(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated numbers, e.g. 1,2".into());
    }
    let l12: f64 = parts[0].trim().parse().map_err(|_| "L12 is not a number")?;
    let l21: f64 = parts[1].trim().parse().map_err(|_| "L21 is not a number")?;
    Ok((l12, l21))
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Some(ConfigFile::load(path)?),
        None => None,
    };

    if let Some(jobs) = cli.jobs.or_else(|| config.as_ref().and_then(|c| c.jobs)) {
        // Ignore the error if a pool already exists (e.g. repeated calls
        // in tests); the run stays deterministic either way.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    let master_seed = cli
        .seed
        .or_else(|| config.as_ref().and_then(|c| c.master_seed))
        .unwrap_or(0);

    let require_config = || -> Result<&ConfigFile, CliError> {
        config
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs --config".into()))
    };
    let require_out = || -> Result<&PathBuf, CliError> {
        cli.out
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs --out".into()))
    };

    match &cli.command {
        Cmd::Synth => commands::run_synth(require_config()?, require_out()?, master_seed),
        Cmd::Train => commands::run_train(require_config()?, require_out()?, master_seed),
        Cmd::Loocv => {
            commands::run_loocv(require_config()?, require_out()?, master_seed, cli.losses)
        }
        Cmd::Holdout => {
            commands::run_holdout(require_config()?, require_out()?, master_seed, cli.losses)
        }
        Cmd::CutoutHoldout => {
            commands::run_cutout_holdout(require_config()?, require_out()?, master_seed)
        }
        Cmd::Classify { model, image } => commands::run_classify(model, image, cli.losses),
        Cmd::Flops { input, hidden, cost } => commands::run_flops(
            config.as_ref(),
            *input,
            hidden.clone(),
            cost.clone(),
        ),
        Cmd::Report { run } => commands::run_report(run),
    }
}
