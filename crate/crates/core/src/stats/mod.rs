//! Statistics engine: rating aggregation, one-way ICC, Wilcoxon rank-sum and
//! L2-regularized logistic regression under nested stratified cross-validation.
//!
//! Everything here is pure and reentrant.

mod aggregate;
mod cv;
mod icc;
mod logistic;
mod wilcoxon;

use serde::Serialize;
use thiserror::Error;

pub use aggregate::{aggregate, AggregatedItem, RatingMatrix};
pub use cv::{
    nested_cv, stratified_folds, ClassMetrics, ClassSummary, Confusion, CvConfig, CvReport,
    FoldReport, MeanStd, MetricSummary,
};
pub use icc::{icc_oneway, spearman_brown, IccResult};
pub use logistic::{
    logistic_fit, logistic_fit_traced, objective, objective_gradient, predict, predict_class,
    sigmoid, FitOptions, LogisticModel,
};
pub use wilcoxon::{
    wilcoxon_by_label, wilcoxon_rank_sum, wilcoxon_rank_sum_with, WilcoxonMethod, WilcoxonMode,
    WilcoxonResult,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unbalanced design: item `{item}` has {found} ratings, expected {expected}")]
    Unbalanced {
        item: String,
        found: usize,
        expected: usize,
    },
    #[error("degenerate: {0}")]
    Degenerate(&'static str),
    #[error("single class in labels")]
    SingleClass,
    #[error("non-finite feature at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("optimizer did not converge after {iterations} iterations (gradient max-norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
    },
    /// The inner search needs two members of each class to stratify.
    #[error("outer fold {fold}: training split has fewer than two members of a class")]
    ClassAbsent { fold: usize },
    #[error("missing metadata for sentence `{0}`")]
    MissingMetadata(String),
}

/// Wraps a result with the inputs that determine it.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance<T: Serialize, C: Serialize> {
    pub input_hash: String,
    pub seed: Option<u64>,
    pub config: C,
    pub result: T,
}
