use std::path::PathBuf;

use clap::Args;
use prag_core::eval::{ablation_matrix, CoverageMatcher};
use prag_core::pragmatics::DecodeMode;
use prag_core::speaker::load_speaker;

use super::{load_schema, pick, read_records, required, write_output, DecodeArgs};
use crate::config::ExperimentConfig;
use crate::error::{Classify, CliError, CliResult};

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Records to decode (JSONL).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub speaker: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Ablation CSV; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub decode: DecodeArgs,
}

pub fn run(args: &AblateArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    let schema = load_schema(&args.schema, cfg)?;
    let config = args.decode.resolve(cfg, DecodeMode::Distractor)?;
    let input: PathBuf = required(&args.input, &cfg.input, "input")?;
    let speaker = load_speaker(required::<PathBuf>(&args.speaker, &cfg.speaker, "speaker")?).usage()?;
    let records = read_records(&input, &schema)?;
    if records.is_empty() {
        return Err(CliError::usage(format!("{}: no records", input.display())));
    }
    let matcher = CoverageMatcher::from_schema(&schema);
    let matrix = ablation_matrix(speaker.as_ref(), &records, &schema, &config, &matcher).runtime()?;
    write_output(pick(&args.out, &cfg.out).as_deref(), &matrix.to_csv().runtime()?)
}
