mod common;

use std::fs;
use std::path::Path;

use voicelens::metrics::EvalSummary;
use voicelens::pipeline::{run_pipeline, Config, Manifest, RunOptions, Stage};

fn staged() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let config = common::stage_fixture(dir.path());
    (dir, config)
}

fn read(out: &Path, rel: &str) -> Vec<u8> {
    fs::read(out.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn two_runs_are_byte_identical() {
    let (_a, ca) = staged();
    let (_b, cb) = staged();
    let ra = run_pipeline(&ca, &RunOptions::default()).unwrap();
    let rb = run_pipeline(&cb, &RunOptions::default()).unwrap();
    assert_eq!(ra.executed, Stage::ALL.to_vec());
    for rel in ["manifest.json", "eval/report.json", "eval/report.csv", "lda/model.json"] {
        assert_eq!(read(&ra.out_dir, rel), read(&rb.out_dir, rel), "{rel} differs");
    }

    let manifest: Manifest = serde_json::from_slice(&read(&ra.out_dir, "manifest.json")).unwrap();
    assert_eq!(manifest, ra.manifest);
    for (rel, hash) in &manifest.outputs {
        if rel.starts_with("runs/") {
            continue;
        }
        assert_eq!(&voicelens::pipeline::sha256_hex(&read(&ra.out_dir, rel)), hash, "{rel}");
    }
    for expected in [
        "corpus.jsonl",
        "codebook.csv",
        "runs/llm-themes.jsonl",
        "runs/llm-sentiment.jsonl",
        "runs/lda-themes.jsonl",
        "runs/lexicon-sentiment.jsonl",
        "lda/worksheet.csv",
        "lda/diagnostics.csv",
        "eval/report.json",
    ] {
        assert!(manifest.outputs.contains_key(expected), "missing {expected}");
    }

    let repro: serde_json::Value = serde_json::from_slice(&read(&ra.out_dir, "llm/repro.json")).unwrap();
    assert_eq!(repro["fraction_reproducible"], 1.0);

    let summary: EvalSummary = serde_json::from_slice(&read(&ra.out_dir, "eval/report.json")).unwrap();
    assert!(!summary.thematic.is_empty());
    assert!(!summary.sentiment.is_empty());
    let llm_child = summary
        .thematic
        .iter()
        .find(|r| r.machine_run == "llm-themes" && r.reference_run == "human-themes")
        .expect("llm vs human report");
    assert!(llm_child.hit_rate.unwrap() > 50.0);
}

#[test]
fn resume_after_interruption_matches_full_run() {
    let (_full, cfull) = staged();
    let full = run_pipeline(&cfull, &RunOptions::default()).unwrap();

    let (_dir, config) = staged();
    let stop = RunOptions { resume: false, fail_before: Some(Stage::Evaluate) };
    let err = run_pipeline(&config, &stop).unwrap_err();
    assert!(err.to_string().contains("evaluate"));
    let resumed = run_pipeline(&config, &RunOptions { resume: true, fail_before: None }).unwrap();
    assert_eq!(resumed.executed, vec![Stage::Evaluate, Stage::Report]);
    assert_eq!(resumed.skipped.len(), 5);
    assert_eq!(
        read(&full.out_dir, "manifest.json"),
        read(&resumed.out_dir, "manifest.json")
    );

    let again = run_pipeline(&config, &RunOptions { resume: true, fail_before: None }).unwrap();
    assert!(again.executed.is_empty());
}

#[test]
fn changed_config_invalidates_checkpoint() {
    let (_dir, config) = staged();
    let stop = RunOptions { resume: false, fail_before: Some(Stage::Report) };
    run_pipeline(&config, &stop).unwrap_err();
    let text = fs::read_to_string(&config).unwrap().replace("bootstrap_iters = 50", "bootstrap_iters = 10");
    fs::write(&config, text).unwrap();
    let r = run_pipeline(&config, &RunOptions { resume: true, fail_before: None }).unwrap();
    assert_eq!(r.executed, Stage::ALL.to_vec());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let text = fs::read_to_string(common::fixtures_dir().join("pipeline.toml")).unwrap();
    assert!(Config::from_toml(&text).is_ok());
    assert!(Config::from_toml(&format!("{text}\n[extra]\nx = 1\n")).is_err());
}
