use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use prag_core::data::relexicalize;
use prag_core::distractor::{value_frequencies, DistractorPolicy};
use prag_core::listener::{load_listener, ListenerModel};
use prag_core::pipeline::{render, Decoder};
use prag_core::pragmatics::DecodeMode;
use prag_core::speaker::load_speaker;
use serde_json::{json, Value};

use super::{load_schema, pick, read_records, required, write_output, DecodeArgs};
use crate::config::ExperimentConfig;
use crate::error::{Classify, CliError, CliResult};

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Records to decode (JSONL).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub speaker: Option<PathBuf>,
    /// Listener file; required in reconstructor mode.
    #[arg(long)]
    pub listener: Option<PathBuf>,
    /// `base`, `reconstructor` or `distractor`.
    #[arg(long)]
    pub mode: Option<String>,
    /// `mask-all`, `mask-single:<attr>`, `previous-unit` or `none`.
    #[arg(long)]
    pub distractor_policy: Option<String>,
    /// Training split whose value frequencies fill `mask-all` distractors.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Predictions file (JSONL); stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub decode: DecodeArgs,
}

pub fn run(args: &GenerateArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    let schema = load_schema(&args.schema, cfg)?;
    let mode = match pick(&args.mode, &cfg.mode) {
        Some(m) => DecodeMode::from_str(&m).usage()?,
        None => DecodeMode::Base,
    };
    let config = args.decode.resolve(cfg, mode)?;
    let policy = match pick(&args.distractor_policy, &cfg.distractor_policy) {
        Some(p) => DistractorPolicy::from_str(&p).usage()?,
        None => DistractorPolicy::MaskAll,
    };
    policy.validate(&schema).usage()?;
    let listener_path = pick(&args.listener, &cfg.listener);
    if mode == DecodeMode::Reconstructor && listener_path.is_none() {
        return Err(CliError::usage("reconstructor mode needs --listener"));
    }
    let input: PathBuf = required(&args.input, &cfg.input, "input")?;
    let speaker_path: PathBuf = required(&args.speaker, &cfg.speaker, "speaker")?;

    let speaker = load_speaker(&speaker_path).usage()?;
    let listener: Option<std::sync::Arc<dyn ListenerModel>> = match &listener_path {
        Some(p) if mode == DecodeMode::Reconstructor => Some(load_listener(p, &schema).usage()?),
        _ => None,
    };
    let records = read_records(&input, &schema)?;
    let freqs = if mode == DecodeMode::Distractor && policy == DistractorPolicy::MaskAll {
        let train: PathBuf = required(&args.train, &cfg.train, "train")?;
        let mrs: Vec<_> = read_records(&train, &schema)?.into_iter().map(|r| r.mr).collect();
        Some(value_frequencies(&mrs, &schema).usage()?)
    } else {
        None
    };

    let decoder = Decoder {
        speaker: speaker.as_ref(),
        listener: listener.as_deref(),
        schema: &schema,
        config,
        policy,
        freqs: freqs.as_ref(),
    };
    let candidates = decoder.decode(&records).runtime()?;
    let texts = render(&candidates, speaker.vocab());
    let mut out = String::new();
    for ((record, cand), text) in records.iter().zip(&candidates).zip(texts) {
        let mut line = json!({
            "id": record.id,
            "output": relexicalize(&text, &record.delex),
            "base_logprob": cand.base_logprob,
        });
        let obj = line.as_object_mut().expect("object literal");
        if let Some(l) = cand.listener_logprob {
            obj.insert("listener_logprob".into(), Value::from(l));
        }
        if let Some(c) = cand.combined_score {
            obj.insert("combined_score".into(), Value::from(c));
        }
        out.push_str(&serde_json::to_string(&line).runtime()?);
        out.push('\n');
    }
    write_output(pick(&args.out, &cfg.out).as_deref(), &out)
}
