//! `genstudy`: build datasets, run the rating service, simulate studies and
//! analyse ratings from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use genstudy_core::corpus::{
    join_concreteness, load_corpus, load_lexicon, sample_dataset, validate_dataset,
};
use genstudy_core::report::{
    analysis_input_hash, cv_document, icc_document, predictor_label, report_files, run_pipeline,
    wilcoxon_document, PipelineConfig, PREDICTOR_SETS,
};
use genstudy_core::service::{
    export_json, http, import_csv, RandomTokens, ServiceConfig, StudyService, SystemClock,
};
use genstudy_core::sim::{synthetic_pool, PoolSpec};
use genstudy_core::stats::aggregate;
use genstudy_core::{Dimension, RatingRecord, StudyDataset};

#[derive(Parser)]
#[command(
    name = "genstudy",
    version,
    about = "Continuous-scale genericity annotation studies"
)]
struct Cli {
    /// TOML configuration (pipeline settings; service settings for `serve`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for written files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Output format for printed results and rating exports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Join corpus and lexicon, sample noun groups and write dataset.json.
    BuildDataset {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Serve the rating API.
    Serve {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
    },
    /// Run simulated raters through the service and write ratings.csv.
    Simulate {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Run one analysis on a dataset and a rating export.
    Analyze {
        #[arg(value_enum)]
        analysis: Analysis,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        ratings: PathBuf,
    },
    /// Write metric tables, example table and histograms.
    Report {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        ratings: PathBuf,
    },
    /// Build → rate → analyse → report, writing a manifest-stamped bundle.
    Pipeline,
    /// Write a synthetic corpus.tsv and lexicon.csv.
    SyntheticCorpus {
        #[arg(long, default_value_t = 60)]
        lemmas: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Analysis {
    Icc,
    Wilcoxon,
    Classify,
}

fn pipeline_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.dataset.seed = seed;
        config.cv.seed = seed;
        config.simulation.inclusiveness.seed = seed;
        config.simulation.abstractness.seed = seed.wrapping_add(1);
        config.simulation.token_seed = seed;
    }
    Ok(config)
}

fn write(dir: &Path, rel: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn read_dataset(path: &Path) -> Result<StudyDataset> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(StudyDataset::from_json(&text)?)
}

fn read_ratings(path: &Path) -> Result<(String, Vec<RatingRecord>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records = import_csv(&text)?.into_iter().map(Into::into).collect();
    Ok((text, records))
}

fn build_dataset(cli: &Cli, corpus: Option<&Path>, lexicon: Option<&Path>) -> Result<()> {
    let config = pipeline_config(cli)?;
    let corpus = corpus.unwrap_or(&config.corpus);
    let lexicon = lexicon.unwrap_or(&config.lexicon);
    let sentences = load_corpus(corpus)?;
    let sentences = join_concreteness(sentences, &load_lexicon(lexicon)?)?;
    let dataset = sample_dataset(&sentences, &config.dataset)?;
    let report = validate_dataset(&dataset, &config.dataset);
    let path = write(&cli.out_dir, "dataset.json", &dataset.to_json())?;
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        _ => {
            let (g, n) = dataset.label_counts();
            println!(
                "{}: {} groups, {} sentences ({g} GENERIC / {n} NON-GENERIC), concrete share {:.3}",
                path.display(),
                dataset.groups.len(),
                dataset.n_sentences(),
                report.concrete_share
            );
            for check in &report.checks {
                println!(
                    "  {} {}: {} (requires {})",
                    if check.passed { "ok  " } else { "FAIL" },
                    check.name,
                    check.measured,
                    check.requirement
                );
            }
        }
    }
    if !report.passed {
        bail!("dataset violates its constraints");
    }
    Ok(())
}

async fn serve(cli: &Cli, dataset: Option<&Path>, bind: Option<&str>) -> Result<()> {
    let mut config = ServiceConfig::load(cli.config.as_deref())?;
    if let Some(b) = bind {
        config.bind = b.to_string();
    }
    let dataset_path = dataset
        .map(Path::to_path_buf)
        .or(config.dataset_path.clone())
        .context("no dataset: pass --dataset or set dataset_path in the config")?;
    let dataset = read_dataset(&dataset_path)?;
    let (clock, tokens) = (Arc::new(SystemClock), Arc::new(RandomTokens));
    let service = match &config.log_path {
        Some(log) => StudyService::open(dataset, config.study.clone(), log, clock, tokens)?,
        None => StudyService::with_sources(dataset, config.study.clone(), clock, tokens)?,
    };
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .with_context(|| format!("binding {}", config.bind))?;
    tracing::info!(bind = %config.bind, k = config.study.k, "serving");
    axum::serve(listener, http::router(Arc::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn simulate(cli: &Cli, dataset: &Path) -> Result<()> {
    let config = pipeline_config(cli)?;
    let dataset = read_dataset(dataset)?;
    let study = genstudy_core::sim::simulate_study(&dataset, &config.simulation)?;
    let (name, content) = match cli.format {
        Format::Json => {
            let lemma_of = |id: &str| {
                dataset
                    .sentences()
                    .find(|s| s.id == id)
                    .map(|s| s.lemma.clone())
                    .unwrap_or_default()
            };
            ("ratings.json", export_json(&study.records, lemma_of)?)
        }
        _ => ("ratings.csv", study.export_csv),
    };
    let path = write(&cli.out_dir, name, &content)?;
    println!("{}: {} ratings", path.display(), study.records.len());
    Ok(())
}

fn analyze(cli: &Cli, analysis: Analysis, dataset: &Path, ratings: &Path) -> Result<()> {
    let config = pipeline_config(cli)?;
    let dataset = read_dataset(dataset)?;
    let (csv, records) = read_ratings(ratings)?;
    let hash = analysis_input_hash(&dataset, &csv);
    let items = aggregate(&records);
    let docs: Vec<(String, Value)> = match analysis {
        Analysis::Icc => Dimension::ALL
            .iter()
            .map(|&d| {
                Ok((
                    d.to_string(),
                    serde_json::to_value(icc_document(&records, d, &hash)?)?,
                ))
            })
            .collect::<Result<_>>()?,
        Analysis::Wilcoxon => Dimension::ALL
            .iter()
            .map(|&d| {
                let doc = wilcoxon_document(&items, &dataset, d, &hash)?;
                Ok((d.to_string(), serde_json::to_value(doc)?))
            })
            .collect::<Result<_>>()?,
        Analysis::Classify => PREDICTOR_SETS
            .iter()
            .map(|(_, dims)| {
                let doc = cv_document(&items, &dataset, dims, &config.cv, &hash)?;
                Ok((predictor_label(dims), serde_json::to_value(doc)?))
            })
            .collect::<Result<_>>()?,
    };
    match cli.format {
        Format::Json => {
            let map: serde_json::Map<String, Value> = docs.into_iter().collect();
            println!("{}", serde_json::to_string_pretty(&map)?);
        }
        _ => {
            for (name, doc) in &docs {
                println!("{name}: {}", summary_line(analysis, &doc["result"]));
            }
        }
    }
    Ok(())
}

fn summary_line(analysis: Analysis, r: &Value) -> String {
    let f = |v: &Value| v.as_f64().unwrap_or(f64::NAN);
    match analysis {
        Analysis::Icc => format!(
            "ICC(1) = {:.3}, ICC(k) = {:.3} (n = {}, k = {})",
            f(&r["icc1"]),
            f(&r["icck"]),
            r["n"],
            r["k"]
        ),
        Analysis::Wilcoxon => format!("U = {}, p = {:.3e}", r["u"], f(&r["p_two_sided"])),
        Analysis::Classify => {
            let acc = &r["summary"]["accuracy"];
            format!("accuracy {:.3} ± {:.3}", f(&acc["mean"]), f(&acc["std"]))
        }
    }
}

fn report(cli: &Cli, dataset: &Path, ratings: &Path) -> Result<()> {
    let config = pipeline_config(cli)?;
    let dataset = read_dataset(dataset)?;
    let (csv, records) = read_ratings(ratings)?;
    let hash = analysis_input_hash(&dataset, &csv);
    let items = aggregate(&records);
    let reports = PREDICTOR_SETS
        .iter()
        .map(|(_, dims)| {
            let doc = cv_document(&items, &dataset, dims, &config.cv, &hash)?;
            Ok((predictor_label(dims), doc.result))
        })
        .collect::<Result<Vec<_>>>()?;
    for (rel, content) in report_files(&items, &dataset, &reports, config.n_bins)? {
        let path = write(&cli.out_dir, &rel, &content)?;
        if rel == "tables/metrics.txt" && cli.format == Format::Text {
            print!("{content}");
        }
        tracing::debug!(path = %path.display(), "wrote");
    }
    Ok(())
}

fn pipeline(cli: &Cli) -> Result<()> {
    let config = pipeline_config(cli)?;
    let manifest = run_pipeline(&config, &cli.out_dir)?;
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&manifest)?),
        _ => {
            println!(
                "{}: {} artifacts, {} ratings from {}",
                cli.out_dir.display(),
                manifest.artifacts.len(),
                manifest.n_ratings,
                manifest.rating_source
            );
            print!(
                "{}",
                fs::read_to_string(cli.out_dir.join("tables/metrics.txt"))?
            );
        }
    }
    Ok(())
}

fn synthetic_corpus(cli: &Cli, lemmas: usize) -> Result<()> {
    let defaults = PoolSpec::default();
    // Scale sentence counts with the number of lemmas, keeping the default ratio.
    let scale = |n: usize| n * lemmas / defaults.n_lemmas;
    let pool = synthetic_pool(&PoolSpec {
        n_lemmas: lemmas,
        n_generic: scale(defaults.n_generic),
        n_non_generic: scale(defaults.n_non_generic),
        seed: cli.seed.unwrap_or(defaults.seed),
        ..defaults
    });
    let corpus = write(&cli.out_dir, "corpus.tsv", &pool.corpus_tsv())?;
    let lexicon = write(&cli.out_dir, "lexicon.csv", &pool.lexicon_csv())?;
    println!(
        "{}: {} sentences; {}: {} lemmas",
        corpus.display(),
        pool.sentences.len(),
        lexicon.display(),
        pool.lexicon.len()
    );
    Ok(())
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match &cli.command {
        Command::BuildDataset { corpus, lexicon } => {
            build_dataset(&cli, corpus.as_deref(), lexicon.as_deref())
        }
        Command::Serve { dataset, bind } => serve(&cli, dataset.as_deref(), bind.as_deref()).await,
        Command::Simulate { dataset } => simulate(&cli, dataset),
        Command::Analyze {
            analysis,
            dataset,
            ratings,
        } => analyze(&cli, *analysis, dataset, ratings),
        Command::Report { dataset, ratings } => report(&cli, dataset, ratings),
        Command::Pipeline => pipeline(&cli),
        Command::SyntheticCorpus { lemmas } => synthetic_corpus(&cli, *lemmas),
    }
}
