use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn prag(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prag"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = prag(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn lines(dir: &Path, name: &str) -> Vec<Value> {
    read(dir, name)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// A small corpus with a speaker and an attribute listener.
fn workspace() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "synth",
            "--out-dir",
            "d",
            "--n-train",
            "400",
            "--n-dev",
            "5",
            "--n-test",
            "15",
            "--seed",
            "3",
        ],
    );
    ok(d, &["train", "--data", "d/train.jsonl", "--out", "s.json"]);
    ok(
        d,
        &[
            "train",
            "--kind",
            "listener",
            "--data",
            "d/train.jsonl",
            "--out",
            "l.json",
        ],
    );
    tmp
}

fn outputs(dir: &Path, name: &str) -> Vec<String> {
    lines(dir, name)
        .iter()
        .map(|v| v["output"].as_str().unwrap().to_string())
        .collect()
}

const DECODE: [&str; 8] = [
    "generate",
    "--input",
    "d/test.jsonl",
    "--speaker",
    "s.json",
    "--listener",
    "l.json",
    "--train",
];

fn generate(dir: &Path, out: &str, extra: &[&str]) {
    let mut args: Vec<&str> = DECODE.to_vec();
    args.extend(["d/train.jsonl", "--out", out]);
    args.extend(extra);
    ok(dir, &args);
}

#[test]
fn synth_is_seeded_and_sized() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "synth",
            "--out-dir",
            "a",
            "--n-train",
            "30",
            "--n-dev",
            "4",
            "--n-test",
            "6",
        ],
    );
    ok(
        d,
        &[
            "synth",
            "--out-dir",
            "b",
            "--n-train",
            "30",
            "--n-dev",
            "4",
            "--n-test",
            "6",
        ],
    );
    ok(
        d,
        &[
            "synth",
            "--out-dir",
            "c",
            "--n-train",
            "30",
            "--n-dev",
            "4",
            "--n-test",
            "6",
            "--seed",
            "99",
        ],
    );
    for split in ["train", "dev", "test"] {
        let f = format!("{split}.jsonl");
        assert_eq!(read(d, &format!("a/{f}")), read(d, &format!("b/{f}")));
    }
    assert_ne!(read(d, "a/train.jsonl"), read(d, "c/train.jsonl"));
    assert_eq!(read(d, "a/train.jsonl").lines().count(), 30);
    assert_eq!(read(d, "a/dev.jsonl").lines().count(), 4);
    assert_eq!(read(d, "a/test.jsonl").lines().count(), 6);
}

#[test]
fn synth_rejects_bad_grammar_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(
        code(&prag(d, &["synth", "--out-dir", "x", "--omission", "1.5"])),
        2
    );
    std::fs::write(d.join("g.json"), r#"{"connectors": []}"#).unwrap();
    assert_eq!(code(&prag(d, &["synth", "--grammar", "g.json"])), 2);
    assert_eq!(code(&prag(d, &["synth", "--n-train", "zero"])), 2);
    assert!(!d.join("x").exists());
}

#[test]
fn training_is_deterministic_and_validates_input() {
    let tmp = workspace();
    let d = tmp.path();
    ok(d, &["train", "--data", "d/train.jsonl", "--out", "s2.json"]);
    assert_eq!(read(d, "s.json"), read(d, "s2.json"));
    ok(
        d,
        &[
            "train",
            "--kind",
            "listener",
            "--data",
            "d/train.jsonl",
            "--out",
            "l2.json",
        ],
    );
    assert_eq!(read(d, "l.json"), read(d, "l2.json"));

    std::fs::write(d.join("empty.jsonl"), "").unwrap();
    assert_eq!(
        code(&prag(d, &["train", "--data", "empty.jsonl", "--out", "e.json"])),
        2
    );
    assert_eq!(
        code(&prag(d, &["train", "--data", "missing.jsonl", "--out", "e.json"])),
        2
    );
    assert_eq!(
        code(&prag(
            d,
            &[
                "train",
                "--kind",
                "oracle",
                "--data",
                "d/train.jsonl",
                "--out",
                "e.json"
            ]
        )),
        2
    );
    assert_eq!(
        code(&prag(
            d,
            &[
                "train",
                "--data",
                "d/train.jsonl",
                "--out",
                "e.json",
                "--order",
                "0"
            ]
        )),
        2
    );
    assert!(!d.join("e.json").exists());
}

#[test]
fn reverse_listener_and_ensemble_files_load() {
    let tmp = workspace();
    let d = tmp.path();
    ok(
        d,
        &[
            "train",
            "--kind",
            "listener",
            "--listener-type",
            "reverse",
            "--data",
            "d/train.jsonl",
            "--out",
            "r.json",
        ],
    );
    let r: Value = serde_json::from_str(&read(d, "r.json")).unwrap();
    assert_eq!(r["type"], "reverse");
    assert_eq!(r["model"], "r.model.json");
    let model: Value = serde_json::from_str(&read(d, "r.model.json")).unwrap();
    assert_eq!(model["type"], "ngram");

    ok(
        d,
        &[
            "train",
            "--data",
            "d/train.jsonl",
            "--out",
            "s_plain.json",
            "--input-weight",
            "0",
        ],
    );
    ok(
        d,
        &[
            "train",
            "--kind",
            "ensemble",
            "--members",
            "s.json,s_plain.json",
            "--weight",
            "0.7",
            "--out",
            "ens.json",
        ],
    );
    let e: Value = serde_json::from_str(&read(d, "ens.json")).unwrap();
    assert_eq!(e["members"], serde_json::json!(["s.json", "s_plain.json"]));
    assert_eq!(
        code(&prag(
            d,
            &[
                "train",
                "--kind",
                "ensemble",
                "--members",
                "s.json,s_plain.json",
                "--weight",
                "2",
                "--out",
                "bad.json"
            ]
        )),
        2
    );

    ok(
        d,
        &[
            "generate",
            "--input",
            "d/test.jsonl",
            "--speaker",
            "s.json",
            "--mode",
            "reconstructor",
            "--listener",
            "r.json",
            "--out",
            "rev.jsonl",
        ],
    );
    ok(
        d,
        &[
            "generate",
            "--input",
            "d/test.jsonl",
            "--speaker",
            "ens.json",
            "--out",
            "ens_out.jsonl",
        ],
    );
    assert_eq!(lines(d, "rev.jsonl").len(), 15);
    assert_eq!(lines(d, "ens_out.jsonl").len(), 15);
}

#[test]
fn pragmatic_modes_reduce_to_base() {
    let tmp = workspace();
    let d = tmp.path();
    generate(d, "base.jsonl", &["--mode", "base"]);
    generate(d, "r0.jsonl", &["--mode", "reconstructor", "--lambda", "0"]);
    generate(d, "d0.jsonl", &["--mode", "distractor", "--alpha", "0"]);
    let base = outputs(d, "base.jsonl");
    assert_eq!(outputs(d, "r0.jsonl"), base);
    assert_eq!(outputs(d, "d0.jsonl"), base);
}

#[test]
fn prediction_records_carry_mode_scores() {
    let tmp = workspace();
    let d = tmp.path();
    generate(d, "base.jsonl", &[]);
    generate(d, "rec.jsonl", &["--mode", "reconstructor"]);
    let base = lines(d, "base.jsonl");
    assert_eq!(base.len(), 15);
    assert_eq!(base[0]["id"], "synth-400");
    let keys: Vec<&String> = base[0].as_object().unwrap().keys().collect();
    assert_eq!(keys, ["base_logprob", "id", "output"]);
    for v in lines(d, "rec.jsonl") {
        assert!(v["listener_logprob"].is_f64() && v["combined_score"].is_f64());
    }
    // relexicalized: no placeholder survives for an assigned proper noun
    assert!(base
        .iter()
        .all(|v| !v["output"].as_str().unwrap().contains("NAME_PLH")));
}

#[test]
fn generate_rejects_incomplete_setups() {
    let tmp = workspace();
    let d = tmp.path();
    let base = ["generate", "--input", "d/test.jsonl", "--speaker", "s.json"];
    let with = |extra: &[&str]| {
        let mut a = base.to_vec();
        a.extend(extra);
        code(&prag(d, &a))
    };
    assert_eq!(with(&["--mode", "reconstructor"]), 2);
    assert_eq!(with(&["--mode", "distractor"]), 2);
    assert_eq!(with(&["--mode", "sideways"]), 2);
    assert_eq!(
        with(&[
            "--mode",
            "distractor",
            "--distractor-policy",
            "mask-single:colour"
        ]),
        2
    );
    assert_eq!(with(&["--lambda", "1.5"]), 2);
    assert_eq!(with(&["--beam-size", "0"]), 2);
    assert_eq!(with(&["--preset", "poetry"]), 2);
    assert_eq!(with(&["--workers", "0"]), 2);
    assert_eq!(
        with(&["--mode", "distractor", "--distractor-policy", "mask-single:food"]),
        0
    );
}

#[test]
fn output_does_not_depend_on_workers() {
    let tmp = workspace();
    let d = tmp.path();
    generate(d, "w1.jsonl", &["--mode", "distractor", "--workers", "1"]);
    generate(d, "w4.jsonl", &["--mode", "distractor", "--workers", "4"]);
    assert_eq!(read(d, "w1.jsonl"), read(d, "w4.jsonl"));
}

fn reference_predictions(dir: &Path, split: &str, out: &str) {
    let mut text = String::new();
    for r in lines(dir, split) {
        let mut reference = r["ref"].as_str().unwrap().to_string();
        for (placeholder, value) in r["delex"].as_object().unwrap() {
            reference = reference.replace(placeholder.as_str(), value.as_str().unwrap());
        }
        text.push_str(&serde_json::json!({ "id": r["id"], "output": reference }).to_string());
        text.push('\n');
    }
    std::fs::write(dir.join(out), text).unwrap();
}

#[test]
fn evaluate_references_against_themselves() {
    let tmp = workspace();
    let d = tmp.path();
    reference_predictions(d, "d/test.jsonl", "refs.jsonl");
    let out = ok(
        d,
        &[
            "evaluate",
            "--predictions",
            "refs.jsonl",
            "--references",
            "d/test.jsonl",
        ],
    );
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["bleu"], 100.0);
    assert_eq!(report["rouge_l"], 1.0);
    assert_eq!(report["coverage"].as_object().unwrap().len(), 8);

    ok(
        d,
        &[
            "evaluate",
            "--predictions",
            "refs.jsonl",
            "--references",
            "d/test.jsonl",
            "--metrics",
            "bleu",
            "--out",
            "m.json",
        ],
    );
    let subset: Value = serde_json::from_str(&read(d, "m.json")).unwrap();
    assert_eq!(subset.as_object().unwrap().keys().collect::<Vec<_>>(), ["bleu"]);
    assert_eq!(
        code(&prag(
            d,
            &[
                "evaluate",
                "--predictions",
                "refs.jsonl",
                "--references",
                "d/test.jsonl",
                "--metrics",
                "meteor"
            ]
        )),
        2
    );
}

#[test]
fn evaluate_lists_unmatched_ids() {
    let tmp = workspace();
    let d = tmp.path();
    reference_predictions(d, "d/dev.jsonl", "dev_refs.jsonl");
    let out = prag(
        d,
        &[
            "evaluate",
            "--predictions",
            "dev_refs.jsonl",
            "--references",
            "d/test.jsonl",
        ],
    );
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unmatched ids") && stderr.contains("synth-415") && stderr.contains("synth-400"));
}

#[test]
fn ablation_csv_shape_and_zero_alpha() {
    let tmp = workspace();
    let d = tmp.path();
    let args = [
        "ablate",
        "--input",
        "d/test.jsonl",
        "--speaker",
        "s.json",
        "--beam-size",
        "3",
    ];
    let out = ok(d, &args);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 8);
    assert!(csv.starts_with("masked,eatType,food,priceRange,customerRating,area,familyFriendly\nBASE,"));

    let mut zero = args.to_vec();
    zero.extend(["--alpha", "0", "--out", "a0.csv"]);
    ok(d, &zero);
    let a0 = read(d, "a0.csv");
    let rows: Vec<&str> = a0.lines().skip(1).map(|l| l.split_once(',').unwrap().1).collect();
    assert!(rows.iter().all(|r| *r == rows[0]));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = workspace();
    let d = tmp.path();
    let cfg = serde_json::json!({
        "input": "d/test.jsonl", "speaker": "s.json", "mode": "base", "beam_size": 3, "out": "cfg.jsonl"
    });
    std::fs::write(d.join("c.json"), cfg.to_string()).unwrap();
    ok(d, &["--config", "c.json", "generate"]);
    ok(d, &["generate", "--config", "c.json", "--out", "flag.jsonl"]);
    assert_eq!(read(d, "cfg.jsonl"), read(d, "flag.jsonl"));
    ok(
        d,
        &[
            "generate",
            "--input",
            "d/test.jsonl",
            "--speaker",
            "s.json",
            "--beam-size",
            "3",
            "--out",
            "plain.jsonl",
        ],
    );
    assert_eq!(read(d, "cfg.jsonl"), read(d, "plain.jsonl"));

    std::fs::write(d.join("bad.json"), r#"{"beam": 3}"#).unwrap();
    assert_eq!(code(&prag(d, &["--config", "bad.json", "generate"])), 2);
    assert_eq!(code(&prag(d, &["--config", "nope.json", "generate"])), 2);
}
