use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{logistic_fit, predict_class, StatsError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub c_grid: Vec<f64>,
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            c_grid: vec![0.001, 0.01, 0.1, 1.0, 10.0],
            outer_folds: 10,
            inner_folds: 5,
            seed: 0,
        }
    }
}

/// Binary confusion counts with GENERIC (`true`) as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(truth: &[bool], predicted: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// Metrics for the positive class.
    pub fn positive(&self) -> ClassMetrics {
        ClassMetrics::from_counts(self.tp, self.fp, self.fn_)
    }

    /// Metrics for the negative class.
    pub fn negative(&self) -> ClassMetrics {
        ClassMetrics::from_counts(self.tn, self.fn_, self.fp)
    }
}

/// Zero when the denominator is zero.
fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

impl ClassMetrics {
    fn from_counts(hit: usize, false_alarm: usize, miss: usize) -> Self {
        let precision = ratio(hit, hit + false_alarm);
        let recall = ratio(hit, hit + miss);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            support: hit + miss,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub chosen_c: f64,
    /// Mean inner-CV accuracy for every grid value, in grid order.
    pub inner_accuracy: Vec<(f64, f64)>,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub generic: ClassMetrics,
    pub non_generic: ClassMetrics,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation over the outer folds.
    pub std: f64,
}

impl MeanStd {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: MeanStd,
    pub generic: ClassSummary,
    pub non_generic: ClassSummary,
}

impl MetricSummary {
    /// Largest fold standard deviation over every reported metric.
    pub fn max_std(&self) -> f64 {
        [&self.generic, &self.non_generic]
            .iter()
            .flat_map(|c| [c.precision.std, c.recall.std, c.f1.std])
            .fold(self.accuracy.std, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub feature_names: Vec<String>,
    pub config: CvConfig,
    pub folds: Vec<FoldReport>,
    pub summary: MetricSummary,
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped, so every fold holds either
/// ⌊n_c/k⌋ or ⌈n_c/k⌉ members of class c. Returns test indices per fold.
pub fn stratified_folds(y: &[bool], k: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [false, true] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(rng);
        for idx in members {
            folds[next].push(idx);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut in_test = vec![false; n];
    for &i in test {
        in_test[i] = true;
    }
    (0..n).filter(|&i| !in_test[i]).collect()
}

fn pick<T: Clone>(src: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| src[i].clone()).collect()
}

fn has_both(y: &[bool]) -> bool {
    y.iter().any(|&v| v) && y.iter().any(|&v| !v)
}

fn fit_and_score(
    x_train: &[Vec<f64>],
    y_train: &[bool],
    x_test: &[Vec<f64>],
    c: f64,
) -> Result<Vec<bool>, StatsError> {
    let model = logistic_fit(x_train, y_train, c)?;
    Ok(x_test.iter().map(|xi| predict_class(&model, xi)).collect())
}

fn inner_search(
    x: &[Vec<f64>],
    y: &[bool],
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<(f64, Vec<(f64, f64)>), StatsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let splits = stratified_folds(y, folds, &mut rng);
    let mut scores = Vec::with_capacity(grid.len());
    for &c in grid {
        let mut total = 0.0;
        for test in &splits {
            let train = complement(y.len(), test);
            let y_train = pick(y, &train);
            if !has_both(&y_train) {
                return Err(StatsError::InvalidInput(
                    "an inner training split lacks a class".into(),
                ));
            }
            let y_test = pick(y, test);
            let predicted = fit_and_score(&pick(x, &train), &y_train, &pick(x, test), c)?;
            total += Confusion::from_predictions(&y_test, &predicted).accuracy();
        }
        scores.push((c, total / splits.len() as f64));
    }
    // Highest mean accuracy; ties go to the smallest C.
    let mut best = scores[0];
    for &(c, acc) in &scores[1..] {
        if acc > best.1 || (acc == best.1 && c < best.0) {
            best = (c, acc);
        }
    }
    Ok((best.0, scores))
}

/// Outer stratified k-fold evaluation with an inner stratified grid search
/// over C on every outer training split. Outer folds run in parallel; the
/// report depends only on the inputs and `config.seed`.
pub fn nested_cv(
    x: &[Vec<f64>],
    y: &[bool],
    feature_names: &[String],
    config: &CvConfig,
) -> Result<CvReport, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::InvalidInput(format!(
            "{} feature rows for {} labels",
            x.len(),
            y.len()
        )));
    }
    if config.outer_folds < 2 || config.inner_folds < 2 {
        return Err(StatsError::InvalidInput("need at least 2 folds".into()));
    }
    if y.len() < config.outer_folds {
        return Err(StatsError::InvalidInput(format!(
            "{} observations for {} outer folds",
            y.len(),
            config.outer_folds
        )));
    }
    if config.c_grid.is_empty() || config.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(StatsError::InvalidInput(
            "C grid must be non-empty and positive".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let outer = stratified_folds(y, config.outer_folds, &mut rng);
    let inner_seeds: Vec<u64> = (0..config.outer_folds).map(|_| rng.random()).collect();

    let folds: Vec<FoldReport> = outer
        .par_iter()
        .zip(inner_seeds.par_iter())
        .enumerate()
        .map(|(fold, (test, &inner_seed))| {
            let train = complement(y.len(), test);
            let y_train = pick(y, &train);
            let positives = y_train.iter().filter(|&&v| v).count();
            if positives < 2 || y_train.len() - positives < 2 {
                return Err(StatsError::ClassAbsent { fold });
            }
            let x_train = pick(x, &train);
            let (chosen_c, inner_accuracy) = inner_search(
                &x_train,
                &y_train,
                &config.c_grid,
                config.inner_folds,
                inner_seed,
            )?;
            let y_test = pick(y, test);
            let predicted = fit_and_score(&x_train, &y_train, &pick(x, test), chosen_c)?;
            let confusion = Confusion::from_predictions(&y_test, &predicted);
            Ok(FoldReport {
                fold,
                chosen_c,
                inner_accuracy,
                n_train: train.len(),
                n_test: test.len(),
                confusion,
                accuracy: confusion.accuracy(),
                generic: confusion.positive(),
                non_generic: confusion.negative(),
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_, _>>()?;

    let class_summary = |get: fn(&FoldReport) -> ClassMetrics| ClassSummary {
        precision: MeanStd::of(folds.iter().map(|f| get(f).precision)),
        recall: MeanStd::of(folds.iter().map(|f| get(f).recall)),
        f1: MeanStd::of(folds.iter().map(|f| get(f).f1)),
    };
    let summary = MetricSummary {
        accuracy: MeanStd::of(folds.iter().map(|f| f.accuracy)),
        generic: class_summary(|f| f.generic),
        non_generic: class_summary(|f| f.non_generic),
    };

    Ok(CvReport {
        feature_names: feature_names.to_vec(),
        config: config.clone(),
        folds,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn planted(n: usize, separation: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let x = y
            .iter()
            .map(|&c| {
                let centre = if c {
                    separation / 2.0
                } else {
                    -separation / 2.0
                };
                vec![
                    centre + noise.sample(&mut rng),
                    centre + noise.sample(&mut rng),
                ]
            })
            .collect();
        (x, y)
    }

    fn names() -> Vec<String> {
        vec!["f1".into(), "f2".into()]
    }

    #[test]
    fn folds_are_stratified() {
        let y: Vec<bool> = (0..324).map(|i| i % 3 == 0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let folds = stratified_folds(&y, 10, &mut rng);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort();
        assert_eq!(all, (0..324).collect::<Vec<_>>());
        let pos = y.iter().filter(|&&v| v).count() as f64;
        for f in &folds {
            let p = f.iter().filter(|&&i| y[i]).count() as f64;
            let q = f.len() as f64 - p;
            assert!((p - pos / 10.0).abs() <= 1.0);
            assert!((q - (324.0 - pos) / 10.0).abs() <= 1.0);
        }
    }

    #[test]
    fn separable_data_is_accurate_and_stable() {
        let (x, y) = planted(324, 6.0, 5);
        let report = nested_cv(&x, &y, &names(), &CvConfig::default()).unwrap();
        assert_eq!(report.folds.len(), 10);
        assert!(report.summary.accuracy.mean >= 0.95);
        assert!(report.summary.max_std() < 0.15);
    }

    #[test]
    fn same_seed_same_report() {
        let (x, y) = planted(120, 1.0, 9);
        let cfg = CvConfig {
            seed: 4,
            ..Default::default()
        };
        let a = nested_cv(&x, &y, &names(), &cfg).unwrap();
        let b = nested_cv(&x, &y, &names(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn confusion_metrics() {
        let truth = [true, true, true, false, false, false, false];
        let pred = [true, true, false, true, false, false, false];
        let c = Confusion::from_predictions(&truth, &pred);
        assert_eq!((c.tp, c.fn_, c.fp, c.tn), (2, 1, 1, 3));
        assert!((c.accuracy() - 5.0 / 7.0).abs() < 1e-15);
        let p = c.positive();
        assert!((p.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.recall - 2.0 / 3.0).abs() < 1e-15);
        let n = c.negative();
        assert!((n.precision - 0.75).abs() < 1e-15);
        assert!((n.recall - 0.75).abs() < 1e-15);
        assert_eq!(n.support, 4);
        // Nothing predicted positive: precision defined as 0.
        let none = Confusion::from_predictions(&[true, false], &[false, false]);
        assert_eq!(none.positive().precision, 0.0);
        assert_eq!(none.positive().f1, 0.0);
    }

    #[test]
    fn class_missing_from_outer_train() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let mut y = vec![false; 12];
        y[0] = true;
        assert!(matches!(
            nested_cv(&x, &y, &["x".into()], &CvConfig::default()),
            Err(StatsError::ClassAbsent { .. })
        ));
    }

    #[test]
    fn too_few_rows() {
        let x = vec![vec![0.0]; 5];
        let y = vec![true, false, true, false, true];
        assert!(nested_cv(&x, &y, &["x".into()], &CvConfig::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn fold_class_counts_within_one(
            y in prop::collection::vec(any::<bool>(), 10..200),
            k in 2usize..11,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let folds = stratified_folds(&y, k, &mut rng);
            let pos = y.iter().filter(|&&v| v).count() as f64;
            let neg = y.len() as f64 - pos;
            for f in &folds {
                let p = f.iter().filter(|&&i| y[i]).count() as f64;
                prop_assert!((p - pos / k as f64).abs() <= 1.0);
                prop_assert!(((f.len() as f64 - p) - neg / k as f64).abs() <= 1.0);
            }
        }
    }
}
