//! `linkfault`: fault-localization experiments end to end — topology files,
//! dataset generation, training, evaluation, baseline comparison, and
//! one-shot diagnosis.
//!
//! Conventions: machine-readable artifacts go to files (or stdout where a
//! command says so); progress and diagnostics go to stderr; the exit code
//! is 0 exactly when the command succeeded.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "linkfault", version, about = "Link-fault localization from passive traffic measurements")]
struct Cli {
    /// Experiment config (TOML). Defaults to $LINKFAULT_CONFIG.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override a config key, e.g. --set train.rf.trees=200. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create or import topology edge-list files.
    Topology {
        #[command(subcommand)]
        command: commands::topology::TopologyCommand,
    },
    /// Generate the per-stage dataset CSVs and the run manifest.
    Dataset,
    /// Train one stage's model from the run's dataset files.
    Train(commands::train::TrainArgs),
    /// Score trained models; write reports and plot-data CSVs.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Race the pipeline against active ping probing on finished runs.
    CompareBaseline(commands::compare::CompareArgs),
    /// Diagnose one feature vector (or a JSONL batch) with trained models.
    Diagnose(commands::diagnose::DiagnoseArgs),
}

fn load_config(config: &Option<PathBuf>, overrides: &[String]) -> Result<ExperimentConfig> {
    let path = config
        .clone()
        .or_else(|| std::env::var_os("LINKFAULT_CONFIG").map(PathBuf::from))
        .context("no config file: pass --config FILE or set LINKFAULT_CONFIG")?;
    ExperimentConfig::load(&path, overrides)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Topology { command } => commands::topology::run(command),
        Command::Dataset => commands::dataset::run(&load_config(&cli.config, &cli.set)?),
        Command::Train(args) => commands::train::run(&load_config(&cli.config, &cli.set)?, &args),
        Command::Evaluate(args) => {
            commands::evaluate::run(&load_config(&cli.config, &cli.set)?, &args)
        }
        Command::CompareBaseline(args) => commands::compare::run(&args),
        Command::Diagnose(args) => commands::diagnose::run(&args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}
