use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown rater `{0}`")]
    UnknownRater(String),
    #[error("already submitted")]
    AlreadySubmitted,
    #[error("assignment abandoned after inactivity")]
    Abandoned,
    #[error("all slots filled")]
    StudyFull,
    #[error("group `{0}` is not part of this rater's batch")]
    GroupNotInBatch(String),
    #[error("group `{0}` already submitted")]
    DuplicateGroup(String),
    #[error("incomplete group: missing {}", .missing.join(", "))]
    IncompleteGroup { missing: Vec<String> },
    #[error("sentence `{0}` is not in the submitted group")]
    ForeignSentence(String),
    #[error("sentence `{0}` rated more than once")]
    DuplicateItem(String),
    #[error("value out of [0,1] for sentence `{sentence_id}`: {value}")]
    ValueOutOfRange { sentence_id: String, value: f64 },
    #[error("no partition of {n} into {{{}}}", .sizes.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))]
    NoPartition { n: usize, sizes: Vec<usize> },
    #[error("invalid study: {0}")]
    InvalidStudy(String),
    #[error("invalid export: {0}")]
    InvalidExport(String),
    #[error("log i/o: {0}")]
    LogIo(#[from] std::io::Error),
    #[error("corrupt log at line {line}: {reason}")]
    LogCorrupt { line: usize, reason: String },
    #[error("configuration: {0}")]
    Config(String),
}

/// JSON error envelope returned by the HTTP API.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub details: Value,
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownRater(_) => "unknown_rater",
            ServiceError::AlreadySubmitted => "already_submitted",
            ServiceError::Abandoned => "assignment_abandoned",
            ServiceError::StudyFull => "all_slots_filled",
            ServiceError::GroupNotInBatch(_) => "group_not_in_batch",
            ServiceError::DuplicateGroup(_) => "duplicate_submission",
            ServiceError::IncompleteGroup { .. } => "incomplete_group",
            ServiceError::ForeignSentence(_) => "foreign_sentence",
            ServiceError::DuplicateItem(_) => "duplicate_item",
            ServiceError::ValueOutOfRange { .. } => "value_out_of_range",
            ServiceError::NoPartition { .. } => "no_partition",
            ServiceError::InvalidStudy(_) => "invalid_study",
            ServiceError::InvalidExport(_) => "invalid_export",
            ServiceError::LogIo(_) | ServiceError::LogCorrupt { .. } => "storage_error",
            ServiceError::Config(_) => "config_error",
        }
    }

    /// HTTP status code for this error.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::UnknownRater(_) => 404,
            ServiceError::AlreadySubmitted
            | ServiceError::DuplicateGroup(_)
            | ServiceError::StudyFull => 409,
            ServiceError::Abandoned => 410,
            ServiceError::GroupNotInBatch(_)
            | ServiceError::IncompleteGroup { .. }
            | ServiceError::ForeignSentence(_)
            | ServiceError::DuplicateItem(_)
            | ServiceError::ValueOutOfRange { .. }
            | ServiceError::InvalidExport(_) => 422,
            ServiceError::NoPartition { .. }
            | ServiceError::InvalidStudy(_)
            | ServiceError::LogIo(_)
            | ServiceError::LogCorrupt { .. }
            | ServiceError::Config(_) => 500,
        }
    }

    pub fn body(&self) -> ErrorBody {
        let details = match self {
            ServiceError::UnknownRater(id) => json!({ "rater_id": id }),
            ServiceError::GroupNotInBatch(g) | ServiceError::DuplicateGroup(g) => {
                json!({ "group_id": g })
            }
            ServiceError::IncompleteGroup { missing } => json!({ "missing": missing }),
            ServiceError::ForeignSentence(s) | ServiceError::DuplicateItem(s) => {
                json!({ "sentence_id": s })
            }
            ServiceError::ValueOutOfRange { sentence_id, value } => {
                json!({ "sentence_id": sentence_id, "value": value })
            }
            ServiceError::NoPartition { n, sizes } => json!({ "groups": n, "batch_sizes": sizes }),
            _ => Value::Null,
        };
        ErrorBody {
            code: self.code().to_string(),
            message: self.to_string(),
            details,
        }
    }
}
