//! `prag`: corpus synthesis, training, pragmatic decoding and evaluation.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ablate, evaluate, generate, synth, train};
use config::ExperimentConfig;
use error::{Classify, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "prag", version, about = "Pragmatically informative text generation")]
struct Cli {
    /// JSON experiment config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Size of the decoding thread pool.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic train/dev/test splits.
    Synth(synth::SynthArgs),
    /// Train a speaker, a listener or an ensemble.
    Train(train::TrainArgs),
    /// Decode a split into predictions.
    Generate(generate::GenerateArgs),
    /// Score predictions against references.
    Evaluate(evaluate::EvaluateArgs),
    /// Coverage under single-attribute masking.
    Ablate(ablate::AblateArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = cli.workers.or(cfg.workers) {
        if n == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .runtime()?;
    }
    match &cli.command {
        Command::Synth(a) => synth::run(a, &cfg, cli.seed),
        Command::Train(a) => train::run(a, &cfg),
        Command::Generate(a) => generate::run(a, &cfg),
        Command::Evaluate(a) => evaluate::run(a, &cfg),
        Command::Ablate(a) => ablate::run(a, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.inner());
            e.exit_code()
        }
    }
}
