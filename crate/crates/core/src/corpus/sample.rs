use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    ConcretenessClass, CorpusError, DatasetConfig, GoldLabel, NounGroup, Sentence, StudyDataset,
};

struct LemmaPool<'a> {
    lemma: &'a str,
    generic: Vec<&'a Sentence>,
    non_generic: Vec<&'a Sentence>,
}

impl LemmaPool<'_> {
    fn available(&self) -> usize {
        self.generic.len() + self.non_generic.len()
    }
}

/// Per-lemma choice of how many sentences of each label to keep.
#[derive(Clone, Copy)]
struct Take {
    generic: usize,
    non_generic: usize,
}

impl Take {
    fn size(self) -> usize {
        self.generic + self.non_generic
    }

    fn gap(self) -> i64 {
        self.generic as i64 - self.non_generic as i64
    }
}

/// Samples noun groups from joined candidates so that every group has
/// `group_size_min..=group_size_max` sentences with both labels, the global
/// label gap stays within tolerance and the concrete-lemma share is on target.
///
/// Lemmas without both labels or with too few sentences are dropped. Each
/// lemma keeps as many sentences as the size cap allows; label composition is
/// chosen greedily against the running gap, then repaired by trading or
/// dropping majority-label sentences if the gap is still out of tolerance.
pub fn sample_dataset(
    candidates: &[Sentence],
    config: &DatasetConfig,
) -> Result<StudyDataset, CorpusError> {
    config.validate()?;

    if let Some(first) = candidates.iter().find(|s| s.concreteness.is_none()) {
        return Err(CorpusError::UnsetConcreteness {
            count: candidates
                .iter()
                .filter(|s| s.concreteness.is_none())
                .count(),
            first: first.id.clone(),
        });
    }

    let order: HashMap<&str, usize> = candidates
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    if order.len() != candidates.len() {
        let mut seen = std::collections::HashSet::new();
        let (row, dup) = candidates
            .iter()
            .enumerate()
            .find(|(_, s)| !seen.insert(s.id.as_str()))
            .expect("a duplicate exists");
        return Err(CorpusError::DuplicateId {
            id: dup.id.clone(),
            row: row + 1,
        });
    }

    let mut by_lemma: BTreeMap<&str, Vec<&Sentence>> = BTreeMap::new();
    for s in candidates {
        by_lemma.entry(s.lemma.as_str()).or_default().push(s);
    }

    let mut concrete = Vec::new();
    let mut abstract_ = Vec::new();
    for (lemma, sentences) in &by_lemma {
        let first = sentences[0].concreteness;
        if sentences.iter().any(|s| s.concreteness != first) {
            return Err(CorpusError::InconsistentConcreteness(lemma.to_string()));
        }
        let pool = LemmaPool {
            lemma,
            generic: sentences
                .iter()
                .copied()
                .filter(|s| s.gold == GoldLabel::Generic)
                .collect(),
            non_generic: sentences
                .iter()
                .copied()
                .filter(|s| s.gold == GoldLabel::NonGeneric)
                .collect(),
        };
        let eligible = !pool.generic.is_empty()
            && !pool.non_generic.is_empty()
            && pool.available() >= config.group_size_min;
        if !eligible {
            continue;
        }
        match first
            .expect("unset concreteness rejected above")
            .class(config.concreteness_threshold)
        {
            ConcretenessClass::Concrete => concrete.push(pool),
            ConcretenessClass::Abstract => abstract_.push(pool),
        }
    }

    let (n_concrete, n_abstract) = lemma_counts(concrete.len(), abstract_.len(), config)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    concrete.shuffle(&mut rng);
    abstract_.shuffle(&mut rng);
    concrete.truncate(n_concrete);
    abstract_.truncate(n_abstract);
    let mut pools: Vec<LemmaPool> = concrete.into_iter().chain(abstract_).collect();
    pools.shuffle(&mut rng);
    for pool in &mut pools {
        pool.generic.shuffle(&mut rng);
        pool.non_generic.shuffle(&mut rng);
    }

    let takes = balance_labels(&pools, config)?;

    let mut groups: Vec<NounGroup> = pools
        .iter()
        .zip(&takes)
        .map(|(pool, take)| {
            let mut chosen: Vec<&Sentence> = pool.generic[..take.generic]
                .iter()
                .chain(&pool.non_generic[..take.non_generic])
                .copied()
                .collect();
            chosen.sort_by_key(|s| order[s.id.as_str()]);
            NounGroup {
                lemma: pool.lemma.to_string(),
                sentences: chosen.into_iter().cloned().collect(),
            }
        })
        .collect();
    groups.sort_by(|a, b| a.lemma.cmp(&b.lemma));

    Ok(StudyDataset {
        groups,
        config: config.clone(),
    })
}

fn share_gap(n_concrete: usize, total: usize, target: f64) -> f64 {
    (n_concrete as f64 / total as f64 - target).abs()
}

fn within(gap: f64, tolerance: f64) -> bool {
    gap <= tolerance + 1e-12
}

/// Best concrete count for `total` groups, with its distance from the target share.
fn best_split(
    available_c: usize,
    available_a: usize,
    total: usize,
    target: f64,
) -> Option<(usize, f64)> {
    let lo = total.saturating_sub(available_a);
    let hi = available_c.min(total);
    (lo..=hi)
        .map(|nc| (nc, share_gap(nc, total, target)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

fn lemma_counts(
    available_c: usize,
    available_a: usize,
    config: &DatasetConfig,
) -> Result<(usize, usize), CorpusError> {
    let eligible = available_c + available_a;
    if eligible == 0 {
        return Err(CorpusError::Infeasible {
            constraint: "eligible lemmas",
            detail: format!(
                "no lemma has both labels and at least {} sentences",
                config.group_size_min
            ),
        });
    }
    let target = config.concrete_share;
    let tol = config.concrete_share_tolerance;
    match config.n_groups {
        Some(total) => {
            if total > eligible {
                return Err(CorpusError::Infeasible {
                    constraint: "group count",
                    detail: format!("requested {total} groups, only {eligible} eligible lemmas"),
                });
            }
            let (nc, gap) = best_split(available_c, available_a, total, target)
                .expect("total <= eligible leaves a non-empty range");
            if !within(gap, tol) {
                return Err(CorpusError::Infeasible {
                    constraint: "concrete share",
                    detail: format!(
                        "best achievable share with {total} groups is {:.3} (target {target} ± {tol})",
                        nc as f64 / total as f64
                    ),
                });
            }
            Ok((nc, total - nc))
        }
        None => {
            for total in (1..=eligible).rev() {
                if let Some((nc, gap)) = best_split(available_c, available_a, total, target) {
                    if within(gap, tol) {
                        return Ok((nc, total - nc));
                    }
                }
            }
            Err(CorpusError::Infeasible {
                constraint: "concrete share",
                detail: format!(
                    "{available_c} concrete and {available_a} abstract lemmas cannot reach share {target} ± {tol}; best is {:.3}",
                    available_c as f64 / eligible as f64
                ),
            })
        }
    }
}

fn balance_labels(pools: &[LemmaPool], config: &DatasetConfig) -> Result<Vec<Take>, CorpusError> {
    let mut takes = Vec::with_capacity(pools.len());
    let mut gap: i64 = 0;
    for pool in pools {
        let size = pool.available().min(config.group_size_max);
        let g_avail = pool.generic.len();
        let n_avail = pool.non_generic.len();
        let lo = size.saturating_sub(n_avail).max(1);
        let hi = g_avail.min(size - 1);
        let generic = (lo..=hi)
            .min_by_key(|&g| (gap + 2 * g as i64 - size as i64).abs())
            .expect("both labels present and size >= 2");
        let take = Take {
            generic,
            non_generic: size - generic,
        };
        gap += take.gap();
        takes.push(take);
    }

    let tol = config.target_label_balance_tolerance as i64;
    while gap.abs() > tol {
        let too_generic = gap > 0;
        let mut moved = false;
        if gap.abs() >= 2 {
            for (pool, take) in pools.iter().zip(takes.iter_mut()) {
                let (major, minor, minor_avail) = if too_generic {
                    (
                        &mut take.generic,
                        &mut take.non_generic,
                        pool.non_generic.len(),
                    )
                } else {
                    (&mut take.non_generic, &mut take.generic, pool.generic.len())
                };
                if *major > 1 && *minor < minor_avail {
                    *major -= 1;
                    *minor += 1;
                    gap += if too_generic { -2 } else { 2 };
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            for take in takes.iter_mut() {
                if take.size() <= config.group_size_min {
                    continue;
                }
                let major = if too_generic {
                    &mut take.generic
                } else {
                    &mut take.non_generic
                };
                if *major > 1 {
                    *major -= 1;
                    gap += if too_generic { -1 } else { 1 };
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            return Err(CorpusError::Infeasible {
                constraint: "label balance",
                detail: format!(
                    "smallest achievable |GENERIC − NON-GENERIC| is {}, tolerance {tol}",
                    gap.abs()
                ),
            });
        }
    }
    Ok(takes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{validate_dataset, Concreteness, TargetSpan};
    use crate::sim::{synthetic_pool, PoolSpec};

    fn sentence(id: &str, lemma: &str, gold: GoldLabel, c: f64) -> Sentence {
        Sentence::new(
            id,
            format!("The {lemma} here."),
            lemma,
            TargetSpan::new(4, 4 + lemma.chars().count()),
            gold,
        )
        .unwrap()
        .with_concreteness(Concreteness::new(c).unwrap())
    }

    fn lemma_block(lemma: &str, generic: usize, non_generic: usize, c: f64) -> Vec<Sentence> {
        (0..generic)
            .map(|i| sentence(&format!("{lemma}-g{i}"), lemma, GoldLabel::Generic, c))
            .chain(
                (0..non_generic)
                    .map(|i| sentence(&format!("{lemma}-n{i}"), lemma, GoldLabel::NonGeneric, c)),
            )
            .collect()
    }

    #[test]
    fn full_size_pool_keeps_everything() {
        let pool = synthetic_pool(&PoolSpec::default());
        let cfg = DatasetConfig {
            target_label_balance_tolerance: 6,
            ..Default::default()
        };
        let ds = sample_dataset(&pool.sentences, &cfg).unwrap();
        assert_eq!(ds.groups.len(), 60);
        assert_eq!(ds.n_sentences(), 324);
        assert_eq!(ds.label_counts(), (159, 165));
        assert!(validate_dataset(&ds, &cfg).passed);
    }

    #[test]
    fn default_tolerance_trims_to_balance() {
        let pool = synthetic_pool(&PoolSpec::default());
        let cfg = DatasetConfig::default();
        let ds = sample_dataset(&pool.sentences, &cfg).unwrap();
        let (g, n) = ds.label_counts();
        assert!(g.abs_diff(n) <= 5);
        assert_eq!(ds.groups.len(), 60);
        assert!(validate_dataset(&ds, &cfg).passed);
    }

    #[test]
    fn single_label_lemma_excluded() {
        let mut cands = Vec::new();
        for (i, lemma) in ["ant", "bee", "cow", "doe", "eel", "fox", "gnu"]
            .iter()
            .enumerate()
        {
            cands.extend(lemma_block(lemma, 2, 2, if i < 5 { 4.5 } else { 2.0 }));
        }
        cands.extend(lemma_block("hen", 5, 0, 4.5));
        let cfg = DatasetConfig {
            concrete_share_tolerance: 0.1,
            ..Default::default()
        };
        let ds = sample_dataset(&cands, &cfg).unwrap();
        assert!(ds.groups.iter().all(|g| g.lemma != "hen"));
        assert_eq!(ds.groups.len(), 7);
    }

    #[test]
    fn exclusions_can_make_it_infeasible() {
        let cands = lemma_block("hen", 6, 0, 4.5);
        let err = sample_dataset(&cands, &DatasetConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::Infeasible {
                constraint: "eligible lemmas",
                ..
            }
        ));
    }

    #[test]
    fn concrete_share_infeasible_reports_best() {
        let mut cands = Vec::new();
        for lemma in ["ant", "bee", "cow", "doe"] {
            cands.extend(lemma_block(lemma, 2, 2, 2.0));
        }
        let err = sample_dataset(&cands, &DatasetConfig::default()).unwrap_err();
        match err {
            CorpusError::Infeasible { constraint, detail } => {
                assert_eq!(constraint, "concrete share");
                assert!(detail.contains("0.000"), "{detail}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn label_balance_infeasible() {
        // Every lemma forced to 3 GENERIC + 1 NON-GENERIC at size 4.
        let mut cands = Vec::new();
        for (i, lemma) in [
            "ant", "bee", "cow", "doe", "eel", "fox", "gnu", "hen", "ibis", "jay",
        ]
        .iter()
        .enumerate()
        {
            cands.extend(lemma_block(lemma, 3, 1, if i < 7 { 4.5 } else { 2.0 }));
        }
        let err = sample_dataset(&cands, &DatasetConfig::default()).unwrap_err();
        match err {
            CorpusError::Infeasible { constraint, detail } => {
                assert_eq!(constraint, "label balance");
                assert!(detail.contains("20"), "{detail}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unset_concreteness_rejected() {
        let s = Sentence::new(
            "a",
            "The cat.",
            "cat",
            TargetSpan::new(4, 7),
            GoldLabel::Generic,
        )
        .unwrap();
        assert!(matches!(
            sample_dataset(&[s], &DatasetConfig::default()),
            Err(CorpusError::UnsetConcreteness { count: 1, .. })
        ));
    }

    #[test]
    fn requested_group_count() {
        let pool = synthetic_pool(&PoolSpec {
            n_lemmas: 100,
            n_generic: 270,
            n_non_generic: 270,
            ..Default::default()
        });
        let cfg = DatasetConfig {
            n_groups: Some(60),
            ..Default::default()
        };
        let ds = sample_dataset(&pool.sentences, &cfg).unwrap();
        assert_eq!(ds.groups.len(), 60);
        let report = validate_dataset(&ds, &cfg);
        assert!(report.passed, "{report:#?}");
        assert!((report.concrete_share - 0.70).abs() < 1e-9);
    }

    #[test]
    fn deterministic_for_seed() {
        let pool = synthetic_pool(&PoolSpec {
            n_lemmas: 90,
            n_generic: 240,
            n_non_generic: 250,
            ..Default::default()
        });
        let cfg = DatasetConfig {
            n_groups: Some(60),
            seed: 11,
            ..Default::default()
        };
        let a = sample_dataset(&pool.sentences, &cfg).unwrap().to_json();
        let b = sample_dataset(&pool.sentences, &cfg).unwrap().to_json();
        assert_eq!(a, b);
        let other = DatasetConfig { seed: 12, ..cfg };
        let c = sample_dataset(&pool.sentences, &other).unwrap().to_json();
        assert_ne!(a, c);
    }
}
