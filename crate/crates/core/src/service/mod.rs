//! Rating collection: batches of noun groups are handed to raters (one
//! dimension each), group-level slider submissions are stored atomically in
//! an append-only log, and completion is tracked toward `k` raters per item.
//!
//! [`StudyService`] is the synchronous core; [`http::router`] exposes it as a
//! JSON API.

mod batches;
mod clock;
mod config;
mod error;
mod export;
pub mod http;
mod log;
mod model;
mod study;

pub use batches::create_batches;
pub use clock::{
    Clock, FixedClock, ManualClock, RandomTokens, SeededTokens, SystemClock, TokenSource,
};
pub use config::ServiceConfig;
pub use error::{ErrorBody, ServiceError};
pub use export::{export_csv, export_json, import_csv, ExportFormat, ExportRow, EXPORT_HEADER};
pub use log::LogEvent;
pub use model::{
    round4, Anchors, Assignment, AssignmentStatus, Batch, Dimension, RatingRecord, ScaleAnchors,
    StudyConfig,
};
pub use study::{
    Ack, CompletionStatus, GroupCompletion, Progress, RatingItem, Registration, StudyService,
    TaskGroup, TaskPayload, TaskSentence,
};
