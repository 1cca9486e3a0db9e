use std::collections::HashMap;

use serde::Serialize;
use statrs::function::erf::erfc;

use super::{AggregatedItem, StatsError};
use crate::corpus::GoldLabel;
use crate::service::Dimension;

/// Largest combined sample size for which the automatic mode enumerates the
/// exact null distribution (ties excluded).
pub const EXACT_MAX_N: usize = 12;

/// Forced exact computation is refused above this size.
const EXACT_HARD_LIMIT: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WilcoxonMode {
    /// Exact when `N <= 12` and there are no ties, normal approximation otherwise.
    Auto,
    Exact,
    NormalApprox,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// Mann-Whitney U of the first sample: its rank sum minus n_a(n_a+1)/2.
    pub u: f64,
    pub rank_sum_a: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Continuity-corrected normal deviate; absent for the exact method.
    pub z: Option<f64>,
    pub p_two_sided: f64,
    pub method: WilcoxonMethod,
    pub tie_corrected: bool,
    pub continuity_correction: bool,
}

pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    wilcoxon_rank_sum_with(a, b, WilcoxonMode::Auto)
}

pub fn wilcoxon_rank_sum_with(
    a: &[f64],
    b: &[f64],
    mode: WilcoxonMode,
) -> Result<WilcoxonResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::InvalidInput(
            "both samples need at least one observation".into(),
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite observation".into()));
    }
    let n_a = a.len();
    let n_b = b.len();
    let n = n_a + n_b;

    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_groups) = midranks(&pooled);
    if tie_groups.contains(&n) {
        return Err(StatsError::Degenerate("all observations tied"));
    }
    let has_ties = tie_groups.iter().any(|&t| t > 1);

    let rank_sum_a: f64 = ranks[..n_a].iter().sum();
    let u = rank_sum_a - (n_a * (n_a + 1)) as f64 / 2.0;

    let method = match mode {
        WilcoxonMode::Auto if n <= EXACT_MAX_N && !has_ties => WilcoxonMethod::Exact,
        WilcoxonMode::Auto | WilcoxonMode::NormalApprox => WilcoxonMethod::NormalApprox,
        WilcoxonMode::Exact => {
            if has_ties {
                return Err(StatsError::InvalidInput(
                    "exact distribution requires untied observations".into(),
                ));
            }
            if n > EXACT_HARD_LIMIT {
                return Err(StatsError::InvalidInput(format!(
                    "exact distribution limited to N <= {EXACT_HARD_LIMIT}"
                )));
            }
            WilcoxonMethod::Exact
        }
    };

    let (z, p) = match method {
        WilcoxonMethod::Exact => {
            // Untied ranks are integers.
            let w = rank_sum_a.round() as usize;
            (None, exact_p(n_a, n, w))
        }
        WilcoxonMethod::NormalApprox => {
            let nf = n as f64;
            let tie_term: f64 = tie_groups
                .iter()
                .map(|&t| {
                    let t = t as f64;
                    t * t * t - t
                })
                .sum::<f64>()
                / (nf * (nf - 1.0));
            let var = (n_a * n_b) as f64 / 12.0 * ((nf + 1.0) - tie_term);
            let centered = u - (n_a * n_b) as f64 / 2.0;
            let corrected = (centered.abs() - 0.5).max(0.0);
            let z = centered.signum() * corrected / var.sqrt();
            let p = erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0);
            (Some(z), p)
        }
    };

    Ok(WilcoxonResult {
        u,
        rank_sum_a,
        n_a,
        n_b,
        z,
        p_two_sided: p,
        method,
        tie_corrected: has_ties && method == WilcoxonMethod::NormalApprox,
        continuity_correction: method == WilcoxonMethod::NormalApprox,
    })
}

/// Midranks (1-based) of `values` and the size of every tie group.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut groups = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mid = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mid;
        }
        groups.push(end - start);
        start = end;
    }
    (ranks, groups)
}

/// Two-sided exact p-value of rank sum `w` for `n_a` of `n` untied ranks.
/// The null distribution counts size-`n_a` subsets of `1..=n` by their sum.
fn exact_p(n_a: usize, n: usize, w: usize) -> f64 {
    let max_sum = n * (n + 1) / 2;
    // counts[j][s]: subsets of size j with sum s over the ranks seen so far.
    let mut counts = vec![vec![0.0f64; max_sum + 1]; n_a + 1];
    counts[0][0] = 1.0;
    for rank in 1..=n {
        for j in (1..=n_a.min(rank)).rev() {
            for s in (rank..=max_sum).rev() {
                let add = counts[j - 1][s - rank];
                if add != 0.0 {
                    counts[j][s] += add;
                }
            }
        }
    }
    let dist = &counts[n_a];
    let total: f64 = dist.iter().sum();
    let lower: f64 = dist[..=w.min(max_sum)].iter().sum();
    let upper: f64 = dist[w.min(max_sum)..].iter().sum();
    (2.0 * lower.min(upper) / total).min(1.0)
}

/// Compares one dimension's item means between GENERIC (first sample) and
/// NON-GENERIC items. Items without a mean on `dimension` are skipped.
pub fn wilcoxon_by_label(
    items: &[AggregatedItem],
    gold: &HashMap<String, GoldLabel>,
    dimension: Dimension,
) -> Result<WilcoxonResult, StatsError> {
    let mut generic = Vec::new();
    let mut non_generic = Vec::new();
    for item in items {
        let Some(mean) = item.mean(dimension) else {
            continue;
        };
        match gold.get(&item.sentence_id) {
            Some(GoldLabel::Generic) => generic.push(mean),
            Some(GoldLabel::NonGeneric) => non_generic.push(mean),
            None => return Err(StatsError::MissingMetadata(item.sentence_id.clone())),
        }
    }
    wilcoxon_rank_sum(&generic, &non_generic)
}
