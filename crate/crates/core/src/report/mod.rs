//! Result presentation: histogram data and SVG, metric and example tables,
//! and the end-to-end pipeline that writes a reproducible report bundle.

mod histogram;
mod pipeline;
mod tables;

use thiserror::Error;

pub use histogram::{histogram_data, Histogram, HistogramSpec, SentenceMeta, Split, Subgroup};
pub use pipeline::{
    analysis_input_hash, cv_document, default_examples, features, gold_map, icc_document, meta_map,
    predictor_label, report_files, run_pipeline, wilcoxon_document, Artifact, Manifest,
    PipelineConfig, PREDICTOR_SETS,
};
pub use tables::{example_table, mark_target, metrics_table, Table, SPAN_MARK};

use crate::service::Dimension;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("missing metadata for sentence `{0}`")]
    MissingMetadata(String),
    #[error("sentence `{sentence_id}` has no {dimension} rating")]
    MissingRating {
        sentence_id: String,
        dimension: Dimension,
    },
    #[error("invalid report configuration: {0}")]
    InvalidSpec(String),
    #[error("stage `{stage}` failed: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ReportError {
    /// Pipeline stage that failed, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            ReportError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
