//! Building blocks for continuous-scale genericity annotation studies.
//!
//! A study starts from a labeled sentence corpus and a concreteness lexicon
//! ([`corpus`]), hands noun groups to raters over HTTP ([`service`]), and
//! checks the collected slider ratings for reliability and agreement with the
//! expert binary labels ([`stats`]). [`sim`] stands in for human raters and
//! [`report`] turns results into tables, histograms and a reproducible bundle.

pub mod corpus;
pub mod hash;
pub mod report;
pub mod service;
pub mod sim;
pub mod stats;

pub use corpus::{
    Concreteness, DatasetConfig, GoldLabel, NounGroup, Sentence, StudyDataset, TargetSpan,
};
pub use service::{Dimension, RatingRecord, StudyConfig, StudyService};
