use serde::Serialize;

use super::{RatingMatrix, StatsError};

/// One-way random-effects ICC (interchangeable raters).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IccResult {
    /// Between-item mean square.
    pub msb: f64,
    /// Within-item mean square.
    pub msw: f64,
    /// Reliability of a single rating.
    pub icc1: f64,
    /// Reliability of the mean of `k` ratings. `-inf` when `msb` is zero.
    pub icck: f64,
    pub n: usize,
    pub k: usize,
}

/// One-way ANOVA mean squares and the ICC(1)/ICC(k) derived from them.
/// Negative estimates are returned as-is.
pub fn icc_oneway(matrix: &RatingMatrix) -> Result<IccResult, StatsError> {
    let n = matrix.n();
    let k = matrix.k();
    let first = matrix.values()[0];
    if matrix.values().iter().all(|&v| v == first) {
        return Err(StatsError::Degenerate("zero total variance"));
    }

    let means: Vec<f64> = matrix
        .rows()
        .map(|r| r.iter().sum::<f64>() / k as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / n as f64;

    let ss_between = k as f64 * means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_within: f64 = matrix
        .rows()
        .zip(&means)
        .map(|(row, m)| row.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();

    let msb = ss_between / (n - 1) as f64;
    let msw = ss_within / (n * (k - 1)) as f64;

    let icc1 = (msb - msw) / (msb + (k - 1) as f64 * msw);
    let icck = if msb == 0.0 {
        f64::NEG_INFINITY
    } else {
        (msb - msw) / msb
    };
    Ok(IccResult {
        msb,
        msw,
        icc1,
        icck,
        n,
        k,
    })
}

/// Reliability of a `k`-rating mean given single-rating reliability `icc1`.
pub fn spearman_brown(icc1: f64, k: usize) -> Result<f64, StatsError> {
    let denom = 1.0 + (k as f64 - 1.0) * icc1;
    if denom == 0.0 {
        return Err(StatsError::Degenerate("Spearman-Brown denominator is zero"));
    }
    Ok(k as f64 * icc1 / denom)
}
