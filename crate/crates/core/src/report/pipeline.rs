use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    example_table, histogram_data, metrics_table, HistogramSpec, ReportError, SentenceMeta, Split,
    Table,
};
use crate::corpus::{
    join_concreteness, load_corpus, load_lexicon, sample_dataset, validate_dataset, DatasetConfig,
    GoldLabel, StudyDataset, ValidationReport,
};
use crate::hash::sha256_hex;
use crate::service::{import_csv, Dimension, RatingRecord};
use crate::sim::{simulate_study, StudySim};
use crate::stats::{
    aggregate, icc_oneway, nested_cv, wilcoxon_by_label, AggregatedItem, CvConfig, CvReport,
    IccResult, Provenance, RatingMatrix, StatsError, WilcoxonResult,
};

/// Everything `run_pipeline` needs. Relative paths are resolved against the
/// directory of the configuration file when loaded with [`PipelineConfig::load`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Tab-separated corpus.
    pub corpus: PathBuf,
    /// `lemma,concreteness` lexicon.
    pub lexicon: PathBuf,
    pub dataset: DatasetConfig,
    /// Existing rating export to analyse; when absent the study is simulated.
    pub ratings: Option<PathBuf>,
    pub simulation: StudySim,
    pub cv: CvConfig,
    pub n_bins: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("corpus.tsv"),
            lexicon: PathBuf::from("lexicon.csv"),
            dataset: DatasetConfig::default(),
            ratings: None,
            simulation: StudySim::default(),
            cv: CvConfig::default(),
            n_bins: 20,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: Self =
            toml::from_str(&text).map_err(|e| ReportError::InvalidSpec(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.corpus);
        resolve(&mut config.lexicon);
        if let Some(r) = config.ratings.as_mut() {
            resolve(r);
        }
        Ok(config)
    }
}

/// Predictor sets evaluated by the classifier, with their bundle names.
pub const PREDICTOR_SETS: [(&str, &[Dimension]); 3] = [
    ("inc", &[Dimension::Inclusiveness]),
    ("abs", &[Dimension::Abstractness]),
    (
        "inc_abs",
        &[Dimension::Inclusiveness, Dimension::Abstractness],
    ),
];

fn stage<T, E: std::fmt::Display>(name: &'static str, r: Result<T, E>) -> Result<T, ReportError> {
    r.map_err(|e| ReportError::Stage {
        stage: name,
        message: e.to_string(),
    })
}

/// Hash tying analysis outputs to the dataset and the exact rating export.
pub fn analysis_input_hash(dataset: &StudyDataset, ratings_csv: &str) -> String {
    sha256_hex(
        format!(
            "{}:{}",
            dataset.content_hash(),
            sha256_hex(ratings_csv.as_bytes())
        )
        .as_bytes(),
    )
}

pub fn gold_map(dataset: &StudyDataset) -> HashMap<String, GoldLabel> {
    dataset
        .sentences()
        .map(|s| (s.id.clone(), s.gold))
        .collect()
}

pub fn meta_map(dataset: &StudyDataset) -> HashMap<String, SentenceMeta> {
    let threshold = dataset.config.concreteness_threshold;
    dataset
        .sentences()
        .filter_map(|s| {
            s.concreteness_class(threshold).map(|class| {
                (
                    s.id.clone(),
                    SentenceMeta {
                        gold: s.gold,
                        class,
                    },
                )
            })
        })
        .collect()
}

/// One-way ICC for one dimension.
pub fn icc_document(
    records: &[RatingRecord],
    dimension: Dimension,
    input_hash: &str,
) -> Result<Provenance<IccResult, Value>, StatsError> {
    let matrix = RatingMatrix::from_records(records, dimension)?;
    Ok(Provenance {
        input_hash: input_hash.to_string(),
        seed: None,
        config: json!({ "dimension": dimension, "model": "one-way random effects" }),
        result: icc_oneway(&matrix)?,
    })
}

/// Rank-sum test of item means, GENERIC versus NON-GENERIC.
pub fn wilcoxon_document(
    items: &[AggregatedItem],
    dataset: &StudyDataset,
    dimension: Dimension,
    input_hash: &str,
) -> Result<Provenance<WilcoxonResult, Value>, StatsError> {
    Ok(Provenance {
        input_hash: input_hash.to_string(),
        seed: None,
        config: json!({ "dimension": dimension, "first_sample": "GENERIC" }),
        result: wilcoxon_by_label(items, &gold_map(dataset), dimension)?,
    })
}

/// Feature rows (one column per dimension) and GENERIC indicators.
pub fn features(
    items: &[AggregatedItem],
    dataset: &StudyDataset,
    dims: &[Dimension],
) -> Result<(Vec<Vec<f64>>, Vec<bool>), StatsError> {
    let gold = gold_map(dataset);
    let mut x = Vec::with_capacity(items.len());
    let mut y = Vec::with_capacity(items.len());
    for item in items {
        let label = gold
            .get(&item.sentence_id)
            .ok_or_else(|| StatsError::MissingMetadata(item.sentence_id.clone()))?;
        let row = dims
            .iter()
            .map(|&d| {
                item.mean(d).ok_or_else(|| {
                    StatsError::InvalidInput(format!("`{}` has no {d} rating", item.sentence_id))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        x.push(row);
        y.push(*label == GoldLabel::Generic);
    }
    Ok((x, y))
}

pub fn cv_document(
    items: &[AggregatedItem],
    dataset: &StudyDataset,
    dims: &[Dimension],
    config: &CvConfig,
    input_hash: &str,
) -> Result<Provenance<CvReport, Value>, StatsError> {
    let (x, y) = features(items, dataset, dims)?;
    let names: Vec<String> = dims.iter().map(|d| d.short().to_uppercase()).collect();
    let report = nested_cv(&x, &y, &names, config)?;
    Ok(Provenance {
        input_hash: input_hash.to_string(),
        seed: Some(config.seed),
        config: json!({ "predictors": names, "positive_class": "GENERIC" }),
        result: report,
    })
}

/// One sentence per (concreteness class, gold label) combination, first in dataset order.
pub fn default_examples(dataset: &StudyDataset) -> Vec<String> {
    let meta = meta_map(dataset);
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for s in dataset.sentences() {
        if let Some(m) = meta.get(&s.id) {
            let key = (m.class, m.gold);
            if !seen.contains(&key) {
                seen.push(key);
                out.push(s.id.clone());
            }
        }
    }
    out
}

/// Metric and example tables plus histogram CSV/SVG files, as
/// `(relative path, content)` pairs in a fixed order.
pub fn report_files(
    items: &[AggregatedItem],
    dataset: &StudyDataset,
    reports: &[(String, CvReport)],
    n_bins: usize,
) -> Result<Vec<(String, String)>, ReportError> {
    let mut files = Vec::new();
    let table_input: Vec<(&str, &CvReport)> =
        reports.iter().map(|(n, r)| (n.as_str(), r)).collect();
    let metrics: Table = metrics_table(&table_input);
    files.push(("tables/metrics.csv".to_string(), metrics.to_csv()));
    files.push(("tables/metrics.txt".to_string(), metrics.to_text()));
    let all_sentences: Vec<_> = dataset.sentences().collect();
    let examples = stage(
        "report",
        example_table(items, &all_sentences, &default_examples(dataset)),
    )?;
    files.push(("tables/examples.csv".to_string(), examples.to_csv()));

    let meta = meta_map(dataset);
    for d in Dimension::ALL {
        for split in [Split::GoldLabel, Split::ConcretenessClass] {
            let spec = HistogramSpec {
                n_bins,
                ..HistogramSpec::new(d, split)
            };
            let h = stage("report", histogram_data(items, &meta, &spec))?;
            files.push((format!("{}.csv", spec.stem()), h.to_csv()));
            files.push((format!("{}.svg", spec.stem()), h.to_svg()));
        }
    }
    Ok(files)
}

/// Display name of a predictor set, e.g. `INC+ABS`.
pub fn predictor_label(dims: &[Dimension]) -> String {
    dims.iter()
        .map(|d| d.short().to_uppercase())
        .collect::<Vec<_>>()
        .join("+")
}

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub generated_at: String,
    pub inputs: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub rating_source: String,
    pub config: PipelineConfig,
    pub validation: ValidationReport,
    pub n_ratings: usize,
    pub artifacts: Vec<Artifact>,
}

struct Bundle {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Bundle {
    fn write(&mut self, rel: &str, content: &str) -> Result<(), ReportError> {
        let path = self.dir.join(rel);
        let io = |source| ReportError::Io {
            path: path.display().to_string(),
            source,
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io)?;
        }
        fs::write(&path, content).map_err(io)?;
        self.artifacts.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(content.as_bytes()),
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), ReportError> {
        let mut text = serde_json::to_string_pretty(value).expect("results serialize");
        text.push('\n');
        self.write(rel, &text)
    }
}

fn read_input(stage_name: &'static str, path: &Path) -> Result<String, ReportError> {
    stage(
        stage_name,
        fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display())),
    )
}

/// Runs build → ratings → aggregate → ICC → Wilcoxon → nested CV → tables
/// and histograms, writing the bundle into `out_dir`. Any failure names the
/// stage it happened in.
pub fn run_pipeline(config: &PipelineConfig, out_dir: &Path) -> Result<Manifest, ReportError> {
    let corpus_text = read_input("load_corpus", &config.corpus)?;
    let sentences = stage("load_corpus", load_corpus(&config.corpus))?;
    let lexicon_text = read_input("join_concreteness", &config.lexicon)?;
    let lexicon = stage("join_concreteness", load_lexicon(&config.lexicon))?;
    let sentences = stage("join_concreteness", join_concreteness(sentences, &lexicon))?;
    let dataset = stage(
        "sample_dataset",
        sample_dataset(&sentences, &config.dataset),
    )?;
    let validation = validate_dataset(&dataset, &config.dataset);
    if !validation.passed {
        let failed: Vec<&str> = validation.failures().map(|c| c.name.as_str()).collect();
        return Err(ReportError::Stage {
            stage: "validate_dataset",
            message: format!("failed checks: {}", failed.join(", ")),
        });
    }

    let (ratings_csv, records, source) = match &config.ratings {
        Some(path) => {
            let text = read_input("import_ratings", path)?;
            let rows = stage("import_ratings", import_csv(&text))?;
            let records: Vec<RatingRecord> = rows.into_iter().map(Into::into).collect();
            (text, records, format!("import:{}", path.display()))
        }
        None => {
            let sim = stage(
                "simulate_study",
                simulate_study(&dataset, &config.simulation),
            )?;
            (sim.export_csv, sim.records, "simulation".to_string())
        }
    };

    let input_hash = analysis_input_hash(&dataset, &ratings_csv);
    let items = aggregate(&records);

    let mut bundle = Bundle {
        dir: out_dir.to_path_buf(),
        artifacts: Vec::new(),
    };
    stage("write_bundle", fs::create_dir_all(out_dir))?;
    bundle.write("dataset.json", &dataset.to_json())?;
    bundle.write("ratings.csv", &ratings_csv)?;

    for d in Dimension::ALL {
        let doc = stage("icc", icc_document(&records, d, &input_hash))?;
        bundle.json(&format!("icc_{}.json", d.short()), &doc)?;
    }
    for d in Dimension::ALL {
        let doc = stage(
            "wilcoxon",
            wilcoxon_document(&items, &dataset, d, &input_hash),
        )?;
        bundle.json(&format!("wilcoxon_{}.json", d.short()), &doc)?;
    }
    let mut reports = Vec::new();
    for (name, dims) in PREDICTOR_SETS {
        let doc = stage(
            "nested_cv",
            cv_document(&items, &dataset, dims, &config.cv, &input_hash),
        )?;
        bundle.json(&format!("cv_{name}.json"), &doc)?;
        reports.push((predictor_label(dims), doc.result));
    }

    for (rel, content) in report_files(&items, &dataset, &reports, config.n_bins)? {
        bundle.write(&rel, &content)?;
    }

    let inputs = BTreeMap::from([
        (
            "corpus_sha256".to_string(),
            sha256_hex(corpus_text.as_bytes()),
        ),
        (
            "lexicon_sha256".to_string(),
            sha256_hex(lexicon_text.as_bytes()),
        ),
        ("dataset_content_hash".to_string(), dataset.content_hash()),
        (
            "ratings_sha256".to_string(),
            sha256_hex(ratings_csv.as_bytes()),
        ),
        ("analysis_input_hash".to_string(), input_hash),
    ]);
    let mut seeds = BTreeMap::from([
        ("dataset".to_string(), config.dataset.seed),
        ("cv".to_string(), config.cv.seed),
    ]);
    if config.ratings.is_none() {
        seeds.insert(
            "sim_inclusiveness".into(),
            config.simulation.inclusiveness.seed,
        );
        seeds.insert(
            "sim_abstractness".into(),
            config.simulation.abstractness.seed,
        );
        seeds.insert("sim_tokens".into(), config.simulation.token_seed);
    }
    let manifest = Manifest {
        generated_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        inputs,
        seeds,
        rating_source: source,
        config: config.clone(),
        validation,
        n_ratings: records.len(),
        artifacts: bundle.artifacts.clone(),
    };
    bundle.json("manifest.json", &manifest)?;
    Ok(manifest)
}
