use std::fs;
use std::path::Path;

use genstudy_core::corpus::DatasetConfig;
use genstudy_core::report::{run_pipeline, PipelineConfig};
use genstudy_core::service::StudyConfig;
use genstudy_core::sim::{synthetic_pool, DimensionSim, MeanModel, PoolSpec, StudySim};
use serde_json::Value;

fn write_inputs(dir: &Path) -> PipelineConfig {
    let pool = synthetic_pool(&PoolSpec {
        n_lemmas: 20,
        n_generic: 54,
        n_non_generic: 54,
        ..Default::default()
    });
    fs::write(dir.join("corpus.tsv"), pool.corpus_tsv()).unwrap();
    fs::write(dir.join("lexicon.csv"), pool.lexicon_csv()).unwrap();
    let planted = |seed| DimensionSim {
        mean: MeanModel::ByGold {
            generic: 0.8,
            non_generic: 0.2,
        },
        sigma_item: 0.1,
        sigma_noise: 0.2,
        seed,
        ..Default::default()
    };
    PipelineConfig {
        corpus: dir.join("corpus.tsv"),
        lexicon: dir.join("lexicon.csv"),
        dataset: DatasetConfig {
            concrete_share_tolerance: 0.05,
            ..Default::default()
        },
        simulation: StudySim {
            study: StudyConfig {
                k: 5,
                ..Default::default()
            },
            inclusiveness: planted(1),
            abstractness: planted(2),
            ..Default::default()
        },
        ..Default::default()
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn bundle_layout_and_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_inputs(dir.path());
    let out = dir.path().join("bundle");
    let manifest = run_pipeline(&config, &out).unwrap();

    for name in [
        "manifest.json",
        "dataset.json",
        "ratings.csv",
        "icc_inc.json",
        "icc_abs.json",
        "wilcoxon_inc.json",
        "wilcoxon_abs.json",
        "cv_inc.json",
        "cv_abs.json",
        "cv_inc_abs.json",
        "tables/metrics.csv",
        "tables/metrics.txt",
        "tables/examples.csv",
    ] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let hist: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.starts_with("hist_").then_some(name)
        })
        .collect();
    assert!(hist.iter().filter(|n| n.ends_with(".csv")).count() >= 4);
    assert!(hist.iter().filter(|n| n.ends_with(".svg")).count() >= 4);

    let icc = read_json(&out.join("icc_inc.json"));
    assert_eq!(
        icc["input_hash"],
        manifest.inputs["analysis_input_hash"].as_str()
    );
    assert!(icc["result"]["icck"].as_f64().unwrap() > 0.9);
    let w = read_json(&out.join("wilcoxon_abs.json"));
    assert!(w["result"]["p_two_sided"].as_f64().unwrap() < 1e-6);
    let cv = read_json(&out.join("cv_inc.json"));
    assert_eq!(cv["result"]["folds"].as_array().unwrap().len(), 10);
    assert!(
        cv["result"]["summary"]["accuracy"]["mean"]
            .as_f64()
            .unwrap()
            >= 0.9
    );

    let metrics = fs::read_to_string(out.join("tables/metrics.csv")).unwrap();
    let rows: Vec<&str> = metrics
        .lines()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(rows, vec!["predictors", "INC", "ABS", "INC+ABS"]);

    let written = read_json(&out.join("manifest.json"));
    assert_eq!(
        written["artifacts"].as_array().unwrap().len(),
        manifest.artifacts.len()
    );
}

#[test]
fn rerun_is_identical_apart_from_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_inputs(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ma = run_pipeline(&config, &a).unwrap();
    let mb = run_pipeline(&config, &b).unwrap();
    assert_eq!(ma.artifacts.len(), mb.artifacts.len());
    for art in &ma.artifacts {
        let x = fs::read(a.join(&art.path)).unwrap();
        let y = fs::read(b.join(&art.path)).unwrap();
        assert!(x == y, "{} differs", art.path);
    }
    let mut ja = read_json(&a.join("manifest.json"));
    let mut jb = read_json(&b.join("manifest.json"));
    ja["generated_at"] = Value::Null;
    jb["generated_at"] = Value::Null;
    assert_eq!(ja, jb);
}

#[test]
fn imported_ratings_give_the_same_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_inputs(dir.path());
    let first = dir.path().join("first");
    run_pipeline(&config, &first).unwrap();
    let imported = PipelineConfig {
        ratings: Some(first.join("ratings.csv")),
        ..config
    };
    let second = dir.path().join("second");
    let manifest = run_pipeline(&imported, &second).unwrap();
    assert!(manifest.rating_source.starts_with("import:"));
    for f in ["icc_inc.json", "wilcoxon_abs.json", "cv_inc_abs.json"] {
        assert_eq!(
            fs::read(first.join(f)).unwrap(),
            fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn missing_lexicon_aborts_at_join() {
    let dir = tempfile::tempdir().unwrap();
    let config = PipelineConfig {
        lexicon: dir.path().join("absent.csv"),
        ..write_inputs(dir.path())
    };
    let err = run_pipeline(&config, &dir.path().join("out")).unwrap_err();
    assert_eq!(err.stage(), Some("join_concreteness"));
    assert!(err.to_string().contains("join_concreteness"));
}

#[test]
fn config_paths_resolve_relative_to_file() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let path = dir.path().join("pipeline.toml");
    fs::write(
        &path,
        "corpus = \"corpus.tsv\"\nlexicon = \"lexicon.csv\"\n[simulation.study]\nk = 2\n",
    )
    .unwrap();
    let config = PipelineConfig::load(&path).unwrap();
    assert_eq!(config.corpus, dir.path().join("corpus.tsv"));
    assert_eq!(config.simulation.study.k, 2);
    assert_eq!(config.cv.c_grid.len(), 5);
}
