use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::service::{Dimension, RatingRecord};

/// Per-sentence mean ratings. A `None` mean marks a dimension with no ratings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatedItem {
    pub sentence_id: String,
    pub inc: Option<f64>,
    pub abs: Option<f64>,
    pub n_inc: usize,
    pub n_abs: usize,
}

impl AggregatedItem {
    pub fn mean(&self, dimension: Dimension) -> Option<f64> {
        match dimension {
            Dimension::Inclusiveness => self.inc,
            Dimension::Abstractness => self.abs,
        }
    }

    pub fn count(&self, dimension: Dimension) -> usize {
        match dimension {
            Dimension::Inclusiveness => self.n_inc,
            Dimension::Abstractness => self.n_abs,
        }
    }
}

/// Arithmetic mean per (sentence, dimension), sorted by sentence id.
pub fn aggregate(records: &[RatingRecord]) -> Vec<AggregatedItem> {
    let mut sums: BTreeMap<&str, [(f64, usize); 2]> = BTreeMap::new();
    for r in records {
        let slot = &mut sums.entry(r.sentence_id.as_str()).or_default()[dim_index(r.dimension)];
        slot.0 += r.value;
        slot.1 += 1;
    }
    sums.into_iter()
        .map(|(id, [(si, ni), (sa, na)])| AggregatedItem {
            sentence_id: id.to_string(),
            inc: (ni > 0).then(|| si / ni as f64),
            abs: (na > 0).then(|| sa / na as f64),
            n_inc: ni,
            n_abs: na,
        })
        .collect()
}

fn dim_index(d: Dimension) -> usize {
    match d {
        Dimension::Inclusiveness => 0,
        Dimension::Abstractness => 1,
    }
}

/// Balanced n × k matrix of ratings for the one-way design: each row is an
/// item, columns carry no rater identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatingMatrix {
    items: Vec<String>,
    k: usize,
    values: Vec<f64>,
}

impl RatingMatrix {
    pub fn new(items: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if items.len() != rows.len() {
            return Err(StatsError::InvalidInput(format!(
                "{} item ids for {} rows",
                items.len(),
                rows.len()
            )));
        }
        if rows.len() < 2 {
            return Err(StatsError::InvalidInput("need at least 2 items".into()));
        }
        let k = rows[0].len();
        if k < 2 {
            return Err(StatsError::InvalidInput(
                "need at least 2 ratings per item".into(),
            ));
        }
        let mut values = Vec::with_capacity(rows.len() * k);
        for (item, row) in items.iter().zip(&rows) {
            if row.len() != k {
                return Err(StatsError::Unbalanced {
                    item: item.clone(),
                    found: row.len(),
                    expected: k,
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::InvalidInput(format!(
                    "non-finite rating for item `{item}`"
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Self { items, k, values })
    }

    /// Rows with generated item ids `0..n`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        let items = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(items, rows)
    }

    /// Collects one dimension's ratings per sentence. Errors if sentences
    /// carry differing rating counts.
    pub fn from_records(
        records: &[RatingRecord],
        dimension: Dimension,
    ) -> Result<Self, StatsError> {
        let mut by_item: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for r in records.iter().filter(|r| r.dimension == dimension) {
            by_item
                .entry(r.sentence_id.as_str())
                .or_default()
                .push(r.value);
        }
        let (items, rows): (Vec<String>, Vec<Vec<f64>>) = by_item
            .into_iter()
            .map(|(id, v)| (id.to_string(), v))
            .unzip();
        Self::new(items, rows)
    }

    pub fn n(&self) -> usize {
        self.items.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.k)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Applies `f` to every value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            items: self.items.clone(),
            k: self.k,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn rec(rater: &str, sentence: &str, dimension: Dimension, value: f64) -> RatingRecord {
        RatingRecord {
            rater_id: rater.into(),
            sentence_id: sentence.into(),
            dimension,
            value,
            submitted_at: Utc.timestamp_opt(0, 0).unwrap(),
        }
    }

    #[test]
    fn mean_of_three() {
        let records: Vec<_> = [0.2, 0.4, 0.6]
            .iter()
            .enumerate()
            .map(|(i, &v)| rec(&format!("r{i}"), "s1", Dimension::Inclusiveness, v))
            .collect();
        let items = aggregate(&records);
        assert_eq!(items.len(), 1);
        assert!((items[0].inc.unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(items[0].n_inc, 3);
        assert_eq!(items[0].abs, None);
        assert_eq!(items[0].n_abs, 0);
    }

    #[test]
    fn all_ones() {
        let records: Vec<_> = (0..30)
            .map(|i| rec(&format!("r{i}"), "s1", Dimension::Abstractness, 1.0))
            .collect();
        let items = aggregate(&records);
        assert_eq!(items[0].abs, Some(1.0));
        assert_eq!(items[0].n_abs, 30);
    }

    #[test]
    fn matrix_from_records_requires_balance() {
        let mut records = vec![
            rec("a", "s1", Dimension::Inclusiveness, 0.1),
            rec("b", "s1", Dimension::Inclusiveness, 0.2),
            rec("c", "s2", Dimension::Inclusiveness, 0.3),
            rec("d", "s2", Dimension::Inclusiveness, 0.4),
            rec("e", "s2", Dimension::Abstractness, 0.4),
        ];
        let m = RatingMatrix::from_records(&records, Dimension::Inclusiveness).unwrap();
        assert_eq!((m.n(), m.k()), (2, 2));
        assert_eq!(m.row(1), &[0.3, 0.4]);
        records.push(rec("f", "s2", Dimension::Inclusiveness, 0.5));
        assert!(matches!(
            RatingMatrix::from_records(&records, Dimension::Inclusiveness),
            Err(StatsError::Unbalanced { .. })
        ));
    }

    #[test]
    fn matrix_shape_checks() {
        assert!(RatingMatrix::from_rows(vec![vec![0.1, 0.2]]).is_err());
        assert!(RatingMatrix::from_rows(vec![vec![0.1], vec![0.2]]).is_err());
        assert!(RatingMatrix::from_rows(vec![vec![0.1, 0.2], vec![0.3]]).is_err());
        assert!(RatingMatrix::from_rows(vec![vec![0.1, f64::NAN], vec![0.3, 0.2]]).is_err());
    }
}
