use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn genstudy(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genstudy"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn build_simulate_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(genstudy(d, &["synthetic-corpus", "--lemmas", "20"]));
    let text = ok(genstudy(
        d,
        &[
            "build-dataset",
            "--corpus",
            "corpus.tsv",
            "--lexicon",
            "lexicon.csv",
        ],
    ));
    assert!(text.contains("20 groups"), "{text}");

    ok(genstudy(
        d,
        &["simulate", "--dataset", "dataset.json", "--seed", "3"],
    ));
    let csv = fs::read_to_string(d.join("ratings.csv")).unwrap();
    assert!(csv.starts_with("rater_id,sentence_id,lemma,dimension,value,submitted_at\n"));

    let json = ok(genstudy(
        d,
        &[
            "analyze",
            "icc",
            "--dataset",
            "dataset.json",
            "--ratings",
            "ratings.csv",
            "--format",
            "json",
        ],
    ));
    let doc: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["INCLUSIVENESS"]["result"]["k"], 30);
    assert_eq!(
        doc["ABSTRACTNESS"]["input_hash"].as_str().unwrap().len(),
        64
    );

    let text = ok(genstudy(
        d,
        &[
            "--out-dir",
            "rep",
            "report",
            "--dataset",
            "dataset.json",
            "--ratings",
            "ratings.csv",
        ],
    ));
    assert!(text.starts_with("predictors"));
    assert!(d.join("rep/tables/examples.csv").is_file());
    assert!(d.join("rep/hist_inc_gold.svg").is_file());
}

#[test]
fn pipeline_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(genstudy(
        d,
        &["--out-dir", "inputs", "synthetic-corpus", "--lemmas", "20"],
    ));
    fs::write(
        d.join("run.toml"),
        "corpus = \"inputs/corpus.tsv\"\nlexicon = \"inputs/lexicon.csv\"\n\
         [simulation.study]\nk = 3\n",
    )
    .unwrap();
    let json = ok(genstudy(
        d,
        &[
            "--config",
            "run.toml",
            "--out-dir",
            "bundle",
            "--format",
            "json",
            "pipeline",
        ],
    ));
    let manifest: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(manifest["rating_source"], "simulation");
    assert!(d.join("bundle/manifest.json").is_file());
}

#[test]
fn failures_exit_non_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = genstudy(
        dir.path(),
        &[
            "build-dataset",
            "--corpus",
            "absent.tsv",
            "--lexicon",
            "absent.csv",
        ],
    );
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}
