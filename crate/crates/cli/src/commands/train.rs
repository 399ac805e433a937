use std::path::{Path, PathBuf};

use clap::Args;
use prag_core::data::{build_vocabulary, training_pairs, CorpusRecord};
use prag_core::listener::{reverse_listener_json, reverse_pairs, train_attribute_listener};
use prag_core::speaker::{
    ensemble_json, load_speaker, train_ngram_speaker, EnsembleFile, EnsembleSpeaker, NGramConfig,
};
use prag_core::{tokenize, AttributeSchema, Vocabulary};

use super::{load_schema, pick, read_records, required, write_output};
use crate::config::ExperimentConfig;
use crate::error::{Classify, CliError, CliResult};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// `speaker`, `listener` or `ensemble`.
    #[arg(long)]
    pub kind: Option<String>,
    /// `attribute` or `reverse`, for `--kind listener`.
    #[arg(long)]
    pub listener_type: Option<String>,
    /// Training split (JSONL).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Add-k smoothing of the n-gram counts.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub input_weight: Option<f64>,
    #[arg(long)]
    pub lexical_iterations: Option<usize>,
    /// Smoothing of the attribute listener's token counts.
    #[arg(long)]
    pub listener_k: Option<f64>,
    /// The two speaker files of an ensemble.
    #[arg(long, value_delimiter = ',')]
    pub members: Option<Vec<PathBuf>>,
    /// Weight of the first ensemble member.
    #[arg(long)]
    pub weight: Option<f64>,
}

pub fn run(args: &TrainArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    let kind = pick(&args.kind, &cfg.kind).unwrap_or_else(|| "speaker".into());
    let out: PathBuf = required(&args.out, &cfg.out, "out")?;
    match kind.as_str() {
        "speaker" => {
            let ngram = ngram_config(args, cfg)?;
            let (schema, records) = training_data(args, cfg)?;
            let vocab = build_vocabulary(&records, &schema);
            let pairs = training_pairs(&records, &schema, &vocab).usage()?;
            let speaker = train_ngram_speaker(&pairs, &vocab, ngram).runtime()?;
            write_output(Some(&out), &speaker.to_json().runtime()?)
        }
        "listener" => {
            let flavor = pick(&args.listener_type, &cfg.listener_type).unwrap_or_else(|| "attribute".into());
            match flavor.as_str() {
                "attribute" => train_attribute(args, cfg, &out),
                "reverse" => train_reverse(args, cfg, &out),
                other => Err(CliError::usage(format!(
                    "unknown listener type `{other}` (expected attribute or reverse)"
                ))),
            }
        }
        "ensemble" => train_ensemble(args, cfg, &out),
        other => Err(CliError::usage(format!(
            "unknown kind `{other}` (expected speaker, listener or ensemble)"
        ))),
    }
}

fn ngram_config(args: &TrainArgs, cfg: &ExperimentConfig) -> CliResult<NGramConfig> {
    let mut c = NGramConfig::default();
    if let Some(v) = pick(&args.order, &cfg.order) {
        c.order = v;
    }
    if let Some(v) = pick(&args.k, &cfg.k) {
        c.k = v;
    }
    if let Some(v) = pick(&args.input_weight, &cfg.input_weight) {
        c.input_weight = v;
    }
    if let Some(v) = pick(&args.lexical_iterations, &cfg.lexical_iterations) {
        c.lexical_iterations = v;
    }
    c.validate().usage()?;
    Ok(c)
}

fn training_data(
    args: &TrainArgs,
    cfg: &ExperimentConfig,
) -> CliResult<(AttributeSchema, Vec<CorpusRecord>)> {
    let schema = load_schema(&args.schema, cfg)?;
    let data: PathBuf = required(&args.data, &cfg.data, "data")?;
    let records = read_records(&data, &schema)?;
    if records.is_empty() {
        return Err(CliError::usage(format!(
            "{}: no training records",
            data.display()
        )));
    }
    Ok((schema, records))
}

fn train_attribute(args: &TrainArgs, cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let k = pick(&args.listener_k, &cfg.listener_k).unwrap_or(0.5);
    let (schema, records) = training_data(args, cfg)?;
    let vocab = build_vocabulary(&records, &schema);
    let corpus: Vec<_> = records
        .iter()
        .map(|r| (r.mr.clone(), tokenize(&r.reference, &vocab)))
        .collect();
    let listener = train_attribute_listener(&corpus, &schema, &vocab, k).usage()?;
    write_output(Some(out), &listener.to_json().runtime()?)
}

/// A reverse listener is a speaker trained on swapped pairs. It is written
/// next to the listener file, which refers to it by file name.
fn train_reverse(args: &TrainArgs, cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let ngram = ngram_config(args, cfg)?;
    let (schema, records) = training_data(args, cfg)?;
    let vocab: Vocabulary = build_vocabulary(&records, &schema);
    let pairs = reverse_pairs(&training_pairs(&records, &schema, &vocab).usage()?);
    let model = train_ngram_speaker(&pairs, &vocab, ngram).runtime()?;
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::usage(format!("bad output path {}", out.display())))?;
    let model_name = format!("{stem}.model.json");
    write_output(
        Some(&out.with_file_name(&model_name)),
        &model.to_json().runtime()?,
    )?;
    write_output(Some(out), &reverse_listener_json(&model_name))
}

fn train_ensemble(args: &TrainArgs, cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let members: Vec<PathBuf> = required(&args.members, &cfg.members, "members")?;
    let [a, b]: [PathBuf; 2] = members
        .try_into()
        .map_err(|_| CliError::usage("an ensemble needs exactly two members"))?;
    let w = required(&args.weight, &cfg.weight, "weight")?;
    let sa = load_speaker(&a).usage()?;
    let sb = load_speaker(&b).usage()?;
    EnsembleSpeaker::new(sa, sb, w).usage()?;
    let file = EnsembleFile {
        w,
        members: [member_path(&a, out)?, member_path(&b, out)?],
    };
    write_output(Some(out), &ensemble_json(&file).runtime()?)
}

/// Member paths are stored relative to the ensemble file when they live
/// under its directory, and absolute otherwise.
fn member_path(member: &Path, out: &Path) -> CliResult<String> {
    let member = member
        .canonicalize()
        .map_err(|e| anyhow::anyhow!("{}: {e}", member.display()))
        .usage()?;
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let dir = dir
        .canonicalize()
        .map_err(|e| anyhow::anyhow!("{}: {e}", dir.display()))
        .usage()?;
    let path = member.strip_prefix(&dir).unwrap_or(&member);
    path.to_str()
        .map(str::to_string)
        .ok_or_else(|| CliError::usage(format!("non-UTF-8 path {}", path.display())))
}
