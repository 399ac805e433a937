use std::path::PathBuf;

use clap::Args;
use prag_core::data::{generate_corpus, write_jsonl, SyntheticGrammar};

use super::pick;
use crate::config::ExperimentConfig;
use crate::error::{Classify, CliError, CliResult};

pub const DEFAULT_SEED: u64 = 17;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Grammar JSON; omitted fields keep the built-in grammar.
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    /// Directory receiving train.jsonl, dev.jsonl and test.jsonl.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_dev: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Reference omission rate, overriding the grammar's.
    #[arg(long, alias = "rho")]
    pub omission: Option<f64>,
    /// Attribute presence probability, overriding the grammar's.
    #[arg(long)]
    pub presence: Option<f64>,
}

/// One corpus is drawn and cut into train, test and dev in that order, so
/// the test split does not depend on the dev size.
pub fn run(args: &SynthArgs, cfg: &ExperimentConfig, seed: Option<u64>) -> CliResult<()> {
    let mut grammar = match pick(&args.grammar, &cfg.grammar) {
        Some(path) => SyntheticGrammar::load(path).usage()?,
        None => SyntheticGrammar::default(),
    };
    if let Some(rho) = pick(&args.omission, &cfg.omission) {
        grammar.omission = rho;
    }
    if let Some(p) = pick(&args.presence, &cfg.presence) {
        grammar.presence = p;
    }
    grammar.validate().usage()?;
    let out_dir = pick(&args.out_dir, &cfg.out_dir).unwrap_or_else(|| PathBuf::from("."));
    let n_train = pick(&args.n_train, &cfg.n_train).unwrap_or(5000);
    let n_dev = pick(&args.n_dev, &cfg.n_dev).unwrap_or(500);
    let n_test = pick(&args.n_test, &cfg.n_test).unwrap_or(500);
    if n_train == 0 {
        return Err(CliError::usage("--n-train must be at least 1"));
    }
    let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);

    let corpus = generate_corpus(&grammar, n_train + n_test + n_dev, seed).runtime()?;
    let (train, rest) = corpus.split_at(n_train);
    let (test, dev) = rest.split_at(n_test);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| anyhow::anyhow!("{}: {e}", out_dir.display()))
        .runtime()?;
    for (name, split) in [("train", train), ("dev", dev), ("test", test)] {
        write_jsonl(split, out_dir.join(format!("{name}.jsonl"))).runtime()?;
    }
    log::info!(
        "wrote {n_train}/{n_dev}/{n_test} records to {}",
        out_dir.display()
    );
    Ok(())
}
