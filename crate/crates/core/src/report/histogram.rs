use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::corpus::{ConcretenessClass, GoldLabel};
use crate::service::Dimension;
use crate::stats::AggregatedItem;

/// How items are divided into subgroups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    GoldLabel,
    ConcretenessClass,
    Both,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::GoldLabel => "gold",
            Split::ConcretenessClass => "concreteness",
            Split::Both => "both",
        }
    }

    fn subgroups(self) -> Vec<String> {
        let golds = [GoldLabel::Generic, GoldLabel::NonGeneric];
        let classes = [ConcretenessClass::Concrete, ConcretenessClass::Abstract];
        match self {
            Split::GoldLabel => golds.iter().map(|g| g.as_str().to_string()).collect(),
            Split::ConcretenessClass => classes.iter().map(|c| c.as_str().to_string()).collect(),
            Split::Both => classes
                .iter()
                .flat_map(|c| {
                    golds
                        .iter()
                        .map(move |g| subgroup_name(*g, *c, Split::Both))
                })
                .collect(),
        }
    }
}

fn subgroup_name(gold: GoldLabel, class: ConcretenessClass, split: Split) -> String {
    match split {
        Split::GoldLabel => gold.as_str().to_string(),
        Split::ConcretenessClass => class.as_str().to_string(),
        Split::Both => format!("{}/{}", class.as_str(), gold.as_str()),
    }
}

/// Sentence-level attributes histograms split on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SentenceMeta {
    pub gold: GoldLabel,
    pub class: ConcretenessClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub dimension: Dimension,
    pub split: Split,
    /// Equal-width bins over [0, 1]; the last bin includes 1.0.
    pub n_bins: usize,
}

impl HistogramSpec {
    pub fn new(dimension: Dimension, split: Split) -> Self {
        Self {
            dimension,
            split,
            n_bins: 20,
        }
    }

    /// File stem such as `hist_inc_gold`.
    pub fn stem(&self) -> String {
        format!("hist_{}_{}", self.dimension.short(), self.split.as_str())
    }

    fn bin(&self, value: f64) -> usize {
        ((value * self.n_bins as f64).floor() as usize).min(self.n_bins - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Subgroup {
    pub name: String,
    pub counts: Vec<usize>,
    pub total: usize,
}

impl Subgroup {
    /// Count divided by (total × bin width); integrates to 1 over [0, 1].
    pub fn densities(&self) -> Vec<f64> {
        let n_bins = self.counts.len() as f64;
        self.counts
            .iter()
            .map(|&c| {
                if self.total == 0 {
                    0.0
                } else {
                    c as f64 * n_bins / self.total as f64
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub spec: HistogramSpec,
    pub subgroups: Vec<Subgroup>,
}

/// Bins each item's mean on `spec.dimension`, per subgroup.
pub fn histogram_data(
    items: &[AggregatedItem],
    meta: &HashMap<String, SentenceMeta>,
    spec: &HistogramSpec,
) -> Result<Histogram, ReportError> {
    if spec.n_bins < 2 {
        return Err(ReportError::InvalidSpec(format!(
            "n_bins = {} (need at least 2)",
            spec.n_bins
        )));
    }
    let names = spec.split.subgroups();
    let mut subgroups: Vec<Subgroup> = names
        .iter()
        .map(|name| Subgroup {
            name: name.clone(),
            counts: vec![0; spec.n_bins],
            total: 0,
        })
        .collect();
    for item in items {
        let m = meta
            .get(&item.sentence_id)
            .ok_or_else(|| ReportError::MissingMetadata(item.sentence_id.clone()))?;
        let value = item
            .mean(spec.dimension)
            .ok_or_else(|| ReportError::MissingRating {
                sentence_id: item.sentence_id.clone(),
                dimension: spec.dimension,
            })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(ReportError::InvalidSpec(format!(
                "value {value} of `{}` outside [0, 1]",
                item.sentence_id
            )));
        }
        let name = subgroup_name(m.gold, m.class, spec.split);
        let g = subgroups
            .iter_mut()
            .find(|g| g.name == name)
            .expect("every combination has a subgroup");
        g.counts[spec.bin(value)] += 1;
        g.total += 1;
    }
    Ok(Histogram {
        spec: spec.clone(),
        subgroups,
    })
}

impl Histogram {
    /// Long format: one line per (subgroup, bin) with count and density.
    pub fn to_csv(&self) -> String {
        let n = self.spec.n_bins;
        let mut out = String::from("subgroup,bin,bin_start,bin_end,count,density\n");
        for g in &self.subgroups {
            for (i, (count, density)) in g.counts.iter().zip(g.densities()).enumerate() {
                let _ = writeln!(
                    out,
                    "{},{i},{:.4},{:.4},{count},{density:.6}",
                    g.name,
                    i as f64 / n as f64,
                    (i + 1) as f64 / n as f64
                );
            }
        }
        out
    }

    /// Minimal static bar chart: one panel per subgroup, bar height ∝ count.
    pub fn to_svg(&self) -> String {
        const W: f64 = 400.0;
        const PANEL_H: f64 = 120.0;
        const PAD: f64 = 24.0;
        let n = self.spec.n_bins as f64;
        let bar_w = W / n;
        let height = self.subgroups.len() as f64 * (PANEL_H + PAD) + PAD;
        let max = self
            .subgroups
            .iter()
            .flat_map(|g| g.counts.iter().copied())
            .max()
            .unwrap_or(0)
            .max(1) as f64;
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{height}" viewBox="0 0 {w} {height}" font-family="sans-serif" font-size="11">"#,
            w = W + 2.0 * PAD
        );
        let _ = writeln!(
            svg,
            r#"<title>{} by {}</title>"#,
            self.spec.dimension,
            self.spec.split.as_str()
        );
        for (p, g) in self.subgroups.iter().enumerate() {
            let top = PAD + p as f64 * (PANEL_H + PAD);
            let base = top + PANEL_H;
            let _ = writeln!(
                svg,
                r#"<text x="{PAD}" y="{:.1}">{} (n={})</text>"#,
                top - 6.0,
                g.name,
                g.total
            );
            let _ = writeln!(
                svg,
                r##"<line x1="{PAD}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="#000"/>"##,
                PAD + W
            );
            for (i, &c) in g.counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let h = c as f64 / max * PANEL_H;
                let _ = writeln!(
                    svg,
                    r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="#4c72b0"/>"##,
                    PAD + i as f64 * bar_w,
                    base - h,
                    bar_w - 1.0
                );
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}
