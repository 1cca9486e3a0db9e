use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Rating dimension; each rater works on exactly one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Dimension {
    Inclusiveness,
    Abstractness,
}

impl Dimension {
    pub const ALL: [Dimension; 2] = [Dimension::Inclusiveness, Dimension::Abstractness];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Inclusiveness => "INCLUSIVENESS",
            Dimension::Abstractness => "ABSTRACTNESS",
        }
    }

    /// Short lowercase tag used in file names (`inc`, `abs`).
    pub fn short(self) -> &'static str {
        match self {
            Dimension::Inclusiveness => "inc",
            Dimension::Abstractness => "abs",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "INCLUSIVENESS" | "INC" => Ok(Dimension::Inclusiveness),
            "ABSTRACTNESS" | "ABS" => Ok(Dimension::Abstractness),
            other => Err(format!("unknown dimension `{other}`")),
        }
    }
}

/// One rater's slider value for one sentence on one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub rater_id: String,
    pub sentence_id: String,
    pub dimension: Dimension,
    pub value: f64,
    pub submitted_at: DateTime<Utc>,
}

/// Stored values keep four decimal digits.
pub fn round4(value: f64) -> f64 {
    (value * 10_000.0).round() / 10_000.0
}

/// A fixed set of noun groups shown to one rater.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub id: String,
    pub group_ids: Vec<String>,
    pub size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentStatus {
    Active,
    Complete,
    Abandoned,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub rater_id: String,
    pub batch_id: String,
    pub dimension: Dimension,
    pub status: AssignmentStatus,
}

/// Slider end labels. `{noun}` is replaced by the group's lemma.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleAnchors {
    pub left: String,
    pub right: String,
    /// Intermediate reference labels, evenly spaced, without snapping.
    #[serde(default)]
    pub ticks: Vec<String>,
}

impl ScaleAnchors {
    pub fn render(template: &str, noun: &str) -> String {
        template.replace("{noun}", noun)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchors {
    pub inclusiveness: ScaleAnchors,
    pub abstractness: ScaleAnchors,
}

impl Anchors {
    pub fn for_dimension(&self, d: Dimension) -> &ScaleAnchors {
        match d {
            Dimension::Inclusiveness => &self.inclusiveness,
            Dimension::Abstractness => &self.abstractness,
        }
    }
}

impl Default for Anchors {
    fn default() -> Self {
        Self {
            inclusiveness: ScaleAnchors {
                left: "one particular {noun}".into(),
                right: "all {noun}".into(),
                ticks: vec!["some {noun}".into(), "most {noun}".into()],
            },
            abstractness: ScaleAnchors {
                left: "can be seen, heard, touched, smelled or tasted".into(),
                right: "cannot be experienced through the senses".into(),
                ticks: Vec::new(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    /// Raters per item per dimension.
    pub k: usize,
    pub batch_sizes: Vec<usize>,
    /// Active assignments idle longer than this are abandoned and their slot reopens.
    pub abandon_timeout_minutes: u64,
    pub anchors: Anchors,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            k: 30,
            batch_sizes: vec![6, 8, 10],
            abandon_timeout_minutes: 60,
            anchors: Anchors::default(),
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.k < 1 {
            return Err("k must be at least 1".into());
        }
        if self.batch_sizes.is_empty() || self.batch_sizes.contains(&0) {
            return Err("batch sizes must be non-empty and positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_names() {
        assert_eq!(
            "inc".parse::<Dimension>().unwrap(),
            Dimension::Inclusiveness
        );
        assert_eq!(
            "ABSTRACTNESS".parse::<Dimension>().unwrap(),
            Dimension::Abstractness
        );
        assert_eq!(
            serde_json::to_string(&Dimension::Inclusiveness).unwrap(),
            "\"INCLUSIVENESS\""
        );
    }

    #[test]
    fn rounding() {
        assert_eq!(round4(0.123_456), 0.1235);
        assert_eq!(round4(1.0), 1.0);
        assert_eq!(round4(0.0), 0.0);
    }
}
