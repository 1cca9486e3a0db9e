use std::collections::HashMap;

use serde::Serialize;

use super::ReportError;
use crate::corpus::Sentence;
use crate::stats::{AggregatedItem, CvReport};

/// Marker placed on both sides of the target noun in example rows.
pub const SPAN_MARK: &str = "__";

/// A rectangular table of preformatted cells.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    /// Columns padded to their widest cell; the first column is
    /// left-aligned, the others right-aligned.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|j| {
                std::iter::once(&self.header)
                    .chain(&self.rows)
                    .map(|r| r[j].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &Vec<String>| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, &w))| {
                    if j == 0 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        out.push_str(
            &"-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)),
        );
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

fn two(v: f64) -> String {
    format!("{v:.2}")
}

/// Classification results, one row per predictor set in the given order:
/// mean accuracy (and its fold std) plus per-class precision, recall and F1.
pub fn metrics_table(reports: &[(&str, &CvReport)]) -> Table {
    let mut t = Table::new(&[
        "predictors",
        "accuracy",
        "accuracy_std",
        "generic_precision",
        "generic_recall",
        "generic_f1",
        "non_generic_precision",
        "non_generic_recall",
        "non_generic_f1",
    ]);
    for (name, r) in reports {
        let s = &r.summary;
        t.rows.push(vec![
            name.to_string(),
            two(s.accuracy.mean),
            two(s.accuracy.std),
            two(s.generic.precision.mean),
            two(s.generic.recall.mean),
            two(s.generic.f1.mean),
            two(s.non_generic.precision.mean),
            two(s.non_generic.recall.mean),
            two(s.non_generic.f1.mean),
        ]);
    }
    t
}

/// Wraps the target noun in [`SPAN_MARK`]s.
pub fn mark_target(sentence: &Sentence) -> String {
    let range = sentence.target_byte_range();
    format!(
        "{}{SPAN_MARK}{}{SPAN_MARK}{}",
        &sentence.text[..range.start],
        &sentence.text[range.clone()],
        &sentence.text[range.end..]
    )
}

/// Example sentences with their mean ratings and gold label, in `select` order.
pub fn example_table(
    items: &[AggregatedItem],
    sentences: &[&Sentence],
    select: &[String],
) -> Result<Table, ReportError> {
    let by_item: HashMap<&str, &AggregatedItem> =
        items.iter().map(|i| (i.sentence_id.as_str(), i)).collect();
    let by_sentence: HashMap<&str, &Sentence> =
        sentences.iter().map(|s| (s.id.as_str(), *s)).collect();
    let mut t = Table::new(&["sentence_id", "sentence", "INC", "ABS", "gold"]);
    for id in select {
        let s = by_sentence
            .get(id.as_str())
            .ok_or_else(|| ReportError::MissingMetadata(id.clone()))?;
        let item = by_item.get(id.as_str());
        let cell = |v: Option<f64>| v.map(two).unwrap_or_else(|| "-".into());
        t.rows.push(vec![
            id.clone(),
            mark_target(s),
            cell(item.and_then(|i| i.inc)),
            cell(item.and_then(|i| i.abs)),
            s.gold.as_str().to_string(),
        ]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{GoldLabel, TargetSpan};
    use crate::stats::{ClassSummary, Confusion, CvConfig, FoldReport, MeanStd, MetricSummary};

    fn ms(mean: f64) -> MeanStd {
        MeanStd { mean, std: 0.01 }
    }

    fn report(acc: f64) -> CvReport {
        let cs = ClassSummary {
            precision: ms(0.8),
            recall: ms(0.756),
            f1: ms(0.7),
        };
        CvReport {
            feature_names: vec!["INC".into()],
            config: CvConfig::default(),
            folds: Vec::new(),
            summary: MetricSummary {
                accuracy: ms(acc),
                generic: cs.clone(),
                non_generic: cs,
            },
        }
    }

    #[test]
    fn accuracy_cell() {
        let r = report(0.78);
        let t = metrics_table(&[("INC", &r)]);
        assert_eq!(t.rows[0][1], "0.78");
        assert_eq!(t.rows[0][4], "0.76");
        assert!(t
            .to_csv()
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("INC,0.78,0.01,"));
    }

    #[test]
    fn empty_is_header_only() {
        let t = metrics_table(&[]);
        assert_eq!(t.to_csv().lines().count(), 1);
        assert_eq!(t.to_text().lines().count(), 2);
    }

    #[test]
    fn text_is_aligned() {
        let (a, b) = (report(0.5), report(0.912));
        let text = metrics_table(&[("INC", &a), ("INC+ABS", &b)]).to_text();
        let lens: Vec<usize> = text.lines().map(str::len).collect();
        assert_eq!(lens[0], lens[2]);
        assert_eq!(lens[2], lens[3]);
    }

    #[test]
    fn stored_metrics_match_recomputed() {
        let c = Confusion {
            tp: 13,
            fp: 4,
            tn: 11,
            fn_: 5,
        };
        let fold = FoldReport {
            fold: 0,
            chosen_c: 1.0,
            inner_accuracy: Vec::new(),
            n_train: 0,
            n_test: c.total(),
            confusion: c,
            accuracy: c.accuracy(),
            generic: c.positive(),
            non_generic: c.negative(),
        };
        let json = serde_json::to_string(&fold).unwrap();
        let back: FoldReport = serde_json::from_str(&json).unwrap();
        let (tp, fp, tn, fn_) = (13.0, 4.0, 11.0, 5.0);
        let p = tp / (tp + fp);
        let r = tp / (tp + fn_);
        assert!((back.generic.precision - p).abs() < 1e-9);
        assert!((back.generic.recall - r).abs() < 1e-9);
        assert!((back.generic.f1 - 2.0 * p * r / (p + r)).abs() < 1e-9);
        let np = tn / (tn + fn_);
        let nr = tn / (tn + fp);
        assert!((back.non_generic.precision - np).abs() < 1e-9);
        assert!((back.non_generic.f1 - 2.0 * np * nr / (np + nr)).abs() < 1e-9);
        assert!((back.accuracy - (tp + tn) / 33.0).abs() < 1e-9);
    }

    fn zebra() -> Sentence {
        Sentence::new(
            "z1",
            "Zebras evolved among the Old World horses within the last 4 million years.",
            "zebra",
            TargetSpan::new(0, 6),
            GoldLabel::Generic,
        )
        .unwrap()
    }

    #[test]
    fn example_row_format() {
        let s = zebra();
        let item = AggregatedItem {
            sentence_id: "z1".into(),
            inc: Some(0.97),
            abs: Some(0.88),
            n_inc: 30,
            n_abs: 30,
        };
        let t = example_table(&[item], &[&s], &["z1".into()]).unwrap();
        assert_eq!(
            t.rows[0],
            vec![
                "z1",
                "__Zebras__ evolved among the Old World horses within the last 4 million years.",
                "0.97",
                "0.88",
                "GENERIC"
            ]
        );
    }

    #[test]
    fn empty_selection() {
        let s = zebra();
        let t = example_table(&[], &[&s], &[]).unwrap();
        assert!(t.rows.is_empty());
    }

    #[test]
    fn markers_wrap_exact_substring() {
        let s = Sentence::new(
            "c",
            "The big cät sat",
            "cät",
            TargetSpan::new(8, 11),
            GoldLabel::NonGeneric,
        )
        .unwrap();
        let marked = mark_target(&s);
        let inner = marked.split(SPAN_MARK).nth(1).unwrap();
        assert_eq!(inner, "cät");
        assert_eq!(marked.replace(SPAN_MARK, ""), s.text);
    }

    #[test]
    fn unknown_selection_is_error() {
        assert!(example_table(&[], &[], &["nope".into()]).is_err());
    }
}
