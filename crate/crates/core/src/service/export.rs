use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{Dimension, RatingRecord, ServiceError};

pub const EXPORT_HEADER: [&str; 6] = [
    "rater_id",
    "sentence_id",
    "lemma",
    "dimension",
    "value",
    "submitted_at",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown export format `{other}`")),
        }
    }
}

/// One row of the rating export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    pub rater_id: String,
    pub sentence_id: String,
    pub lemma: String,
    pub dimension: Dimension,
    pub value: f64,
    pub submitted_at: DateTime<Utc>,
}

impl From<ExportRow> for RatingRecord {
    fn from(row: ExportRow) -> Self {
        RatingRecord {
            rater_id: row.rater_id,
            sentence_id: row.sentence_id,
            dimension: row.dimension,
            value: row.value,
            submitted_at: row.submitted_at,
        }
    }
}

fn rows<'a>(
    records: &'a [RatingRecord],
    lemma: impl Fn(&str) -> String + 'a,
) -> impl Iterator<Item = ExportRow> + 'a {
    records.iter().map(move |r| ExportRow {
        rater_id: r.rater_id.clone(),
        sentence_id: r.sentence_id.clone(),
        lemma: lemma(&r.sentence_id),
        dimension: r.dimension,
        value: r.value,
        submitted_at: r.submitted_at,
    })
}

fn sorted(records: &[RatingRecord]) -> Vec<RatingRecord> {
    let mut out = records.to_vec();
    out.sort_by(|a, b| {
        (&a.sentence_id, a.dimension, &a.rater_id).cmp(&(&b.sentence_id, b.dimension, &b.rater_id))
    });
    out
}

/// CSV with [`EXPORT_HEADER`], sorted by (sentence_id, dimension, rater_id).
/// Values carry four decimals; timestamps are RFC 3339 UTC with milliseconds.
pub fn export_csv(
    records: &[RatingRecord],
    lemma: impl Fn(&str) -> String,
) -> Result<String, ServiceError> {
    let records = sorted(records);
    let mut w = csv::Writer::from_writer(Vec::new());
    let invalid = |e: csv::Error| ServiceError::InvalidExport(e.to_string());
    w.write_record(EXPORT_HEADER).map_err(invalid)?;
    for row in rows(&records, lemma) {
        w.write_record([
            row.rater_id.as_str(),
            row.sentence_id.as_str(),
            row.lemma.as_str(),
            row.dimension.as_str(),
            &format!("{:.4}", row.value),
            &row.submitted_at
                .to_rfc3339_opts(SecondsFormat::Millis, true),
        ])
        .map_err(invalid)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| ServiceError::InvalidExport(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// JSON array of [`ExportRow`] in export order.
pub fn export_json(
    records: &[RatingRecord],
    lemma: impl Fn(&str) -> String,
) -> Result<String, ServiceError> {
    let records = sorted(records);
    let rows: Vec<ExportRow> = rows(&records, lemma).collect();
    serde_json::to_string_pretty(&rows).map_err(|e| ServiceError::InvalidExport(e.to_string()))
}

/// Parses an export CSV back into rows. The header must match exactly.
pub fn import_csv(text: &str) -> Result<Vec<ExportRow>, ServiceError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| ServiceError::InvalidExport(e.to_string()))?;
    if header.iter().ne(EXPORT_HEADER.iter().copied()) {
        return Err(ServiceError::InvalidExport(format!(
            "expected header {}",
            EXPORT_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let bad = |field: &str, reason: String| {
            ServiceError::InvalidExport(format!("row {row}, {field}: {reason}"))
        };
        let rec = rec.map_err(|e| bad("record", e.to_string()))?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let dimension = field(3)
            .parse::<Dimension>()
            .map_err(|e| bad("dimension", e))?;
        let value: f64 = field(4)
            .parse()
            .map_err(|e: std::num::ParseFloatError| bad("value", e.to_string()))?;
        if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
            return Err(bad("value", format!("{value} outside [0,1]")));
        }
        let submitted_at = DateTime::parse_from_rfc3339(field(5))
            .map_err(|e| bad("submitted_at", e.to_string()))?
            .with_timezone(&Utc);
        out.push(ExportRow {
            rater_id: field(0).to_string(),
            sentence_id: field(1).to_string(),
            lemma: field(2).to_string(),
            dimension,
            value,
            submitted_at,
        });
    }
    Ok(out)
}
