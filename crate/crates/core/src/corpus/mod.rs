//! Corpus ingestion and study-dataset construction.
//!
//! Input sentences come from a tab-separated corpus file where each row names
//! a target noun by character span and carries an expert binary label. A
//! lemma-level concreteness lexicon is joined on top, and [`sample_dataset`]
//! picks noun groups that satisfy the balancing constraints of a study.

mod io;
mod sample;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{join_concreteness, load_corpus, load_lexicon, parse_corpus, parse_lexicon, Lexicon};
pub use sample::sample_dataset;
pub use validate::{validate_dataset, ConstraintCheck, ValidationReport};

use crate::hash::sha256_hex;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing header column `{0}`")]
    MissingColumn(&'static str),
    /// `row` counts data rows from 1; the header is not counted.
    #[error("malformed row {row}: field `{field}`: {reason}")]
    MalformedRow {
        row: usize,
        field: &'static str,
        reason: String,
    },
    #[error("span out of bounds, row {row}")]
    SpanOutOfBounds { row: usize },
    #[error("duplicate sentence id `{id}`, row {row}")]
    DuplicateId { id: String, row: usize },
    #[error("duplicate lexicon lemma `{lemma}`, row {row}")]
    DuplicateLemma { lemma: String, row: usize },
    #[error("lemmas missing from lexicon: {}", .0.join(", "))]
    MissingLemmas(Vec<String>),
    #[error("{count} sentence(s) have unset concreteness (first: `{first}`)")]
    UnsetConcreteness { count: usize, first: String },
    #[error("lemma `{0}` has inconsistent concreteness across its sentences")]
    InconsistentConcreteness(String),
    #[error("invalid dataset config: {0}")]
    InvalidConfig(String),
    #[error("infeasible constraint `{constraint}`: {detail}")]
    Infeasible {
        constraint: &'static str,
        detail: String,
    },
    #[error("invalid sentence `{id}`: {reason}")]
    InvalidSentence { id: String, reason: String },
    #[error("dataset document: {0}")]
    Document(String),
}

/// Expert binary genericity label of a target noun.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GoldLabel {
    #[serde(rename = "GENERIC")]
    Generic,
    #[serde(rename = "NON-GENERIC")]
    NonGeneric,
}

impl GoldLabel {
    pub const ALL: [GoldLabel; 2] = [GoldLabel::Generic, GoldLabel::NonGeneric];

    pub fn as_str(self) -> &'static str {
        match self {
            GoldLabel::Generic => "GENERIC",
            GoldLabel::NonGeneric => "NON-GENERIC",
        }
    }

    /// Positive class for classification is GENERIC.
    pub fn as_binary(self) -> u8 {
        match self {
            GoldLabel::Generic => 1,
            GoldLabel::NonGeneric => 0,
        }
    }
}

impl fmt::Display for GoldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GoldLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "GENERIC" => Ok(GoldLabel::Generic),
            "NON-GENERIC" | "NON_GENERIC" => Ok(GoldLabel::NonGeneric),
            other => Err(format!("expected GENERIC or NON-GENERIC, got `{other}`")),
        }
    }
}

/// Lemma concreteness on the 1–5 norm scale.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Concreteness(f64);

impl Concreteness {
    pub const MIN: f64 = 1.0;
    pub const MAX: f64 = 5.0;

    pub fn new(score: f64) -> Result<Self, String> {
        if score.is_finite() && (Self::MIN..=Self::MAX).contains(&score) {
            Ok(Self(score))
        } else {
            Err(format!("concreteness {score} outside [1, 5]"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Concrete iff the score is strictly above `threshold`.
    pub fn class(self, threshold: f64) -> ConcretenessClass {
        if self.0 > threshold {
            ConcretenessClass::Concrete
        } else {
            ConcretenessClass::Abstract
        }
    }
}

impl TryFrom<f64> for Concreteness {
    type Error = String;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Concreteness::new(value)
    }
}

impl From<Concreteness> for f64 {
    fn from(c: Concreteness) -> f64 {
        c.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConcretenessClass {
    Concrete,
    Abstract,
}

impl ConcretenessClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ConcretenessClass::Concrete => "concrete",
            ConcretenessClass::Abstract => "abstract",
        }
    }
}

/// Half-open character range `[start, end)` of the target noun.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpan {
    pub start: usize,
    pub end: usize,
}

impl TargetSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    /// Non-empty and within a text of `char_len` characters.
    pub fn fits(&self, char_len: usize) -> bool {
        self.start < self.end && self.end <= char_len
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub lemma: String,
    pub target_span: TargetSpan,
    pub gold: GoldLabel,
    /// `None` until joined with a lexicon.
    pub concreteness: Option<Concreteness>,
}

impl Sentence {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        lemma: impl Into<String>,
        target_span: TargetSpan,
        gold: GoldLabel,
    ) -> Result<Self, CorpusError> {
        let sentence = Self {
            id: id.into(),
            text: text.into(),
            lemma: lemma.into(),
            target_span,
            gold,
            concreteness: None,
        };
        if !sentence.target_span.fits(sentence.text.chars().count()) {
            return Err(CorpusError::InvalidSentence {
                id: sentence.id,
                reason: "target span empty or beyond text".into(),
            });
        }
        Ok(sentence)
    }

    pub fn with_concreteness(mut self, c: Concreteness) -> Self {
        self.concreteness = Some(c);
        self
    }

    /// Byte range of the target span within `text`.
    pub fn target_byte_range(&self) -> std::ops::Range<usize> {
        let byte_at = |char_idx: usize| {
            self.text
                .char_indices()
                .nth(char_idx)
                .map(|(b, _)| b)
                .unwrap_or(self.text.len())
        };
        byte_at(self.target_span.start)..byte_at(self.target_span.end)
    }

    pub fn target_text(&self) -> &str {
        &self.text[self.target_byte_range()]
    }

    pub fn concreteness_class(&self, threshold: f64) -> Option<ConcretenessClass> {
        self.concreteness.map(|c| c.class(threshold))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub group_size_min: usize,
    pub group_size_max: usize,
    /// Largest allowed |#GENERIC − #NON-GENERIC| over the whole dataset.
    pub target_label_balance_tolerance: usize,
    /// Target fraction of concrete lemmas among the selected groups.
    pub concrete_share: f64,
    pub concrete_share_tolerance: f64,
    pub concreteness_threshold: f64,
    /// Exact number of noun groups; `None` keeps as many lemmas as the
    /// constraints allow.
    pub n_groups: Option<usize>,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            group_size_min: 4,
            group_size_max: 8,
            target_label_balance_tolerance: 5,
            concrete_share: 0.70,
            concrete_share_tolerance: 0.05,
            concreteness_threshold: 3.0,
            n_groups: None,
            seed: 0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |msg: String| Err(CorpusError::InvalidConfig(msg));
        if self.group_size_min < 2 {
            return bad("group_size_min must be at least 2 to hold both labels".into());
        }
        if self.group_size_min > self.group_size_max {
            return bad(format!(
                "group_size_min {} exceeds group_size_max {}",
                self.group_size_min, self.group_size_max
            ));
        }
        for (name, v) in [
            ("concrete_share", self.concrete_share),
            ("concrete_share_tolerance", self.concrete_share_tolerance),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} not in [0, 1]"));
            }
        }
        if !self.concreteness_threshold.is_finite() {
            return bad("concreteness_threshold must be finite".into());
        }
        if self.n_groups == Some(0) {
            return bad("n_groups must be positive".into());
        }
        Ok(())
    }
}

/// Sentences sharing one target lemma; the unit of presentation to raters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NounGroup {
    pub lemma: String,
    pub sentences: Vec<Sentence>,
}

impl NounGroup {
    /// Groups are addressed by their lemma, which is unique within a dataset.
    pub fn id(&self) -> &str {
        &self.lemma
    }

    pub fn count(&self, label: GoldLabel) -> usize {
        self.sentences.iter().filter(|s| s.gold == label).count()
    }

    pub fn concreteness(&self) -> Option<Concreteness> {
        self.sentences.first().and_then(|s| s.concreteness)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyDataset {
    pub groups: Vec<NounGroup>,
    pub config: DatasetConfig,
}

#[derive(Serialize, Deserialize)]
struct DatasetDocument {
    config: DatasetConfig,
    groups: Vec<NounGroup>,
    n_sentences: usize,
    content_hash: String,
}

impl StudyDataset {
    pub fn n_sentences(&self) -> usize {
        self.groups.iter().map(|g| g.sentences.len()).sum()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.groups.iter().flat_map(|g| g.sentences.iter())
    }

    pub fn group(&self, id: &str) -> Option<&NounGroup> {
        self.groups.iter().find(|g| g.id() == id)
    }

    pub fn label_counts(&self) -> (usize, usize) {
        let generic = self
            .sentences()
            .filter(|s| s.gold == GoldLabel::Generic)
            .count();
        (generic, self.n_sentences() - generic)
    }

    /// SHA-256 over the canonical JSON of config and groups.
    pub fn content_hash(&self) -> String {
        let body = serde_json::to_vec(&(&self.config, &self.groups))
            .expect("dataset serialization is infallible");
        sha256_hex(&body)
    }

    pub fn to_json(&self) -> String {
        let doc = DatasetDocument {
            config: self.config.clone(),
            groups: self.groups.clone(),
            n_sentences: self.n_sentences(),
            content_hash: self.content_hash(),
        };
        serde_json::to_string_pretty(&doc).expect("dataset serialization is infallible")
    }

    /// Parses a dataset document and checks its content hash.
    pub fn from_json(json: &str) -> Result<Self, CorpusError> {
        let doc: DatasetDocument =
            serde_json::from_str(json).map_err(|e| CorpusError::Document(e.to_string()))?;
        let dataset = StudyDataset {
            groups: doc.groups,
            config: doc.config,
        };
        let actual = dataset.content_hash();
        if actual != doc.content_hash {
            return Err(CorpusError::Document(format!(
                "content hash mismatch: stored {}, computed {actual}",
                doc.content_hash
            )));
        }
        Ok(dataset)
    }
}
