use std::collections::HashSet;

use serde::Serialize;

use super::{ConcretenessClass, DatasetConfig, GoldLabel, StudyDataset};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub passed: bool,
    pub measured: String,
    pub requirement: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ConstraintCheck>,
    pub passed: bool,
    pub n_groups: usize,
    pub n_sentences: usize,
    pub n_generic: usize,
    pub n_non_generic: usize,
    /// Fraction of groups whose lemma is concrete.
    pub concrete_share: f64,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn validate_dataset(dataset: &StudyDataset, config: &DatasetConfig) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name: String, passed: bool, measured: String, requirement: String| {
        checks.push(ConstraintCheck {
            name,
            passed,
            measured,
            requirement,
        })
    };

    let sizes: Vec<usize> = dataset.groups.iter().map(|g| g.sentences.len()).collect();
    let smallest = sizes.iter().copied().min().unwrap_or(0);
    let largest = sizes.iter().copied().max().unwrap_or(0);
    push(
        format!("group size >= {}", config.group_size_min),
        sizes.iter().all(|&s| s >= config.group_size_min),
        smallest.to_string(),
        format!(
            "every group has at least {} sentences",
            config.group_size_min
        ),
    );
    push(
        format!("group size <= {}", config.group_size_max),
        sizes.iter().all(|&s| s <= config.group_size_max),
        largest.to_string(),
        format!(
            "every group has at most {} sentences",
            config.group_size_max
        ),
    );

    let missing_label = dataset
        .groups
        .iter()
        .filter(|g| GoldLabel::ALL.iter().any(|&l| g.count(l) == 0))
        .count();
    push(
        "both labels per group".into(),
        missing_label == 0,
        format!("{missing_label} group(s) lacking a label"),
        "each group has a GENERIC and a NON-GENERIC sentence".into(),
    );

    let mixed = dataset
        .groups
        .iter()
        .filter(|g| g.sentences.iter().any(|s| s.lemma != g.lemma))
        .count();
    push(
        "shared lemma".into(),
        mixed == 0,
        format!("{mixed} group(s) with foreign lemmas"),
        "all sentences in a group share its lemma".into(),
    );

    let mut seen = HashSet::new();
    let duplicates = dataset
        .groups
        .iter()
        .filter(|g| !seen.insert(g.lemma.as_str()))
        .count();
    push(
        "unique lemmas".into(),
        duplicates == 0,
        format!("{duplicates} duplicate lemma(s)"),
        "no lemma appears in two groups".into(),
    );

    let (n_generic, n_non_generic) = dataset.label_counts();
    let gap = n_generic.abs_diff(n_non_generic);
    push(
        "label balance".into(),
        gap <= config.target_label_balance_tolerance,
        gap.to_string(),
        format!(
            "|GENERIC − NON-GENERIC| <= {}",
            config.target_label_balance_tolerance
        ),
    );

    let unset = dataset
        .sentences()
        .filter(|s| s.concreteness.is_none())
        .count();
    push(
        "concreteness set".into(),
        unset == 0,
        format!("{unset} unset"),
        "every sentence carries a concreteness score".into(),
    );

    let classes: Vec<ConcretenessClass> = dataset
        .groups
        .iter()
        .filter_map(|g| g.concreteness())
        .map(|c| c.class(config.concreteness_threshold))
        .collect();
    let concrete_share = if classes.is_empty() {
        0.0
    } else {
        classes
            .iter()
            .filter(|&&c| c == ConcretenessClass::Concrete)
            .count() as f64
            / classes.len() as f64
    };
    push(
        "concrete share".into(),
        !classes.is_empty()
            && (concrete_share - config.concrete_share).abs()
                <= config.concrete_share_tolerance + 1e-12,
        format!("{concrete_share:.4}"),
        format!(
            "{} ± {}",
            config.concrete_share, config.concrete_share_tolerance
        ),
    );

    if let Some(n) = config.n_groups {
        push(
            "group count".into(),
            dataset.groups.len() == n,
            dataset.groups.len().to_string(),
            format!("exactly {n} groups"),
        );
    }

    let passed = checks.iter().all(|c| c.passed);
    ValidationReport {
        checks,
        passed,
        n_groups: dataset.groups.len(),
        n_sentences: dataset.n_sentences(),
        n_generic,
        n_non_generic,
        concrete_share,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{sample_dataset, Concreteness, NounGroup, Sentence, TargetSpan};
    use crate::sim::{synthetic_pool, PoolSpec};

    fn group(lemma: &str, generic: usize, non_generic: usize, c: f64) -> NounGroup {
        let mk = |i: usize, gold| {
            Sentence::new(
                format!("{lemma}{i}"),
                format!("{lemma} x"),
                lemma,
                TargetSpan::new(0, lemma.len()),
                gold,
            )
            .unwrap()
            .with_concreteness(Concreteness::new(c).unwrap())
        };
        NounGroup {
            lemma: lemma.into(),
            sentences: (0..generic)
                .map(|i| mk(i, GoldLabel::Generic))
                .chain((generic..generic + non_generic).map(|i| mk(i, GoldLabel::NonGeneric)))
                .collect(),
        }
    }

    #[test]
    fn full_size_dataset_passes() {
        let cfg = DatasetConfig::default();
        let pool = synthetic_pool(&PoolSpec::default());
        let ds = sample_dataset(&pool.sentences, &cfg).unwrap();
        let report = validate_dataset(&ds, &cfg);
        assert!(report.passed);
        assert!((report.concrete_share - 0.70).abs() < 0.01);
    }

    #[test]
    fn small_group_fails_size_check() {
        let cfg = DatasetConfig {
            concrete_share: 1.0,
            ..Default::default()
        };
        let ds = StudyDataset {
            groups: vec![group("cat", 2, 2, 4.0), group("dog", 1, 2, 4.0)],
            config: cfg.clone(),
        };
        let report = validate_dataset(&ds, &cfg);
        assert!(!report.passed);
        let check = report.check("group size >= 4").unwrap();
        assert!(!check.passed);
        assert_eq!(check.measured, "3");
        assert_eq!(report.failures().count(), 1);
    }

    #[test]
    fn balance_gap_measured() {
        // 39 × (5 GENERIC, 3 NON-GENERIC) + 1 × (5, 7) = 200 / 124.
        let mut groups = Vec::new();
        for i in 0..39 {
            groups.push(group(&format!("n{i}"), 5, 3, 4.0));
        }
        groups.push(group("n39", 5, 7, 4.0));
        let cfg = DatasetConfig {
            concrete_share: 1.0,
            group_size_max: 12,
            ..Default::default()
        };
        let ds = StudyDataset {
            groups,
            config: cfg.clone(),
        };
        assert_eq!(ds.label_counts(), (200, 124));
        let report = validate_dataset(&ds, &cfg);
        let check = report.check("label balance").unwrap();
        assert!(!check.passed);
        assert_eq!(check.measured, "76");
    }

    #[test]
    fn missing_label_detected() {
        let cfg = DatasetConfig {
            concrete_share: 1.0,
            ..Default::default()
        };
        let ds = StudyDataset {
            groups: vec![group("cat", 4, 0, 4.0), group("dog", 0, 4, 4.0)],
            config: cfg.clone(),
        };
        let report = validate_dataset(&ds, &cfg);
        assert!(!report.check("both labels per group").unwrap().passed);
        assert!(report.check("label balance").unwrap().passed);
    }
}
