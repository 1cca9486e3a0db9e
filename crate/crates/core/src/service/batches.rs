use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Batch, ServiceError, StudyConfig};
use crate::corpus::StudyDataset;
use crate::hash::seed_from;

/// Fewest-batches decomposition of `n` into the allowed sizes, largest first.
fn partition(n: usize, sizes: &[usize]) -> Option<Vec<usize>> {
    let mut sizes: Vec<usize> = sizes.to_vec();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes.dedup();
    // best[i]: (batch count, last size used) for a total of i.
    let mut best: Vec<Option<(usize, usize)>> = vec![None; n + 1];
    best[0] = Some((0, 0));
    for total in 1..=n {
        for &s in &sizes {
            if s > total {
                continue;
            }
            if let Some((count, _)) = best[total - s] {
                if best[total].is_none_or(|(c, _)| count + 1 < c) {
                    best[total] = Some((count + 1, s));
                }
            }
        }
    }
    best[n]?;
    let mut out = Vec::new();
    let mut rest = n;
    while rest > 0 {
        let (_, s) = best[rest].expect("reachable by construction");
        out.push(s);
        rest -= s;
    }
    out.sort_unstable_by(|a, b| b.cmp(a));
    Some(out)
}

/// Splits the dataset's groups into batches whose sizes come from
/// `config.batch_sizes`, using as few batches as possible. Group order is
/// shuffled with a seed derived from the dataset content hash.
pub fn create_batches(
    dataset: &StudyDataset,
    config: &StudyConfig,
) -> Result<Vec<Batch>, ServiceError> {
    config.validate().map_err(ServiceError::Config)?;
    let n = dataset.groups.len();
    let sizes = partition(n, &config.batch_sizes)
        .filter(|p| !p.is_empty())
        .ok_or_else(|| {
            let mut sizes = config.batch_sizes.clone();
            sizes.sort_unstable();
            sizes.dedup();
            ServiceError::NoPartition { n, sizes }
        })?;

    let mut ids: Vec<String> = dataset.groups.iter().map(|g| g.id().to_string()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed_from(dataset.content_hash().as_bytes()));
    ids.shuffle(&mut rng);

    let mut rest = ids.as_slice();
    Ok(sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            let (head, tail) = rest.split_at(size);
            rest = tail;
            Batch {
                id: format!("b{i:03}"),
                group_ids: head.to_vec(),
                size,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DatasetConfig, NounGroup};
    use std::collections::HashSet;

    fn dataset(n: usize) -> StudyDataset {
        StudyDataset {
            groups: (0..n)
                .map(|i| NounGroup {
                    lemma: format!("noun{i:02}"),
                    sentences: Vec::new(),
                })
                .collect(),
            config: DatasetConfig::default(),
        }
    }

    /// Every total reachable as a non-negative combination of the sizes.
    fn reachable(n: usize, sizes: &[usize]) -> bool {
        (0..=n / 6).any(|a| {
            (0..=n / 8)
                .any(|b| (0..=n / 10).any(|c| a * sizes[0] + b * sizes[1] + c * sizes[2] == n))
        })
    }

    #[test]
    fn sixty_groups() {
        let batches = create_batches(&dataset(60), &StudyConfig::default()).unwrap();
        assert_eq!(batches.len(), 6);
        assert!(batches
            .iter()
            .all(|b| b.size == 10 && b.group_ids.len() == 10));
        let all: HashSet<&String> = batches.iter().flat_map(|b| &b.group_ids).collect();
        assert_eq!(all.len(), 60);
    }

    #[test]
    fn six_groups_one_batch() {
        let batches = create_batches(&dataset(6), &StudyConfig::default()).unwrap();
        assert_eq!(batches.len(), 1);
        assert_eq!(batches[0].size, 6);
    }

    #[test]
    fn seven_groups_fail() {
        let err = create_batches(&dataset(7), &StudyConfig::default()).unwrap_err();
        assert_eq!(err.to_string(), "no partition of 7 into {6,8,10}");
    }

    #[test]
    fn partition_agrees_with_brute_force() {
        let sizes = [6, 8, 10];
        for n in 1..=120 {
            let p = partition(n, &sizes);
            assert_eq!(p.is_some(), reachable(n, &sizes), "n = {n}");
            if let Some(p) = p {
                assert_eq!(p.iter().sum::<usize>(), n);
            }
        }
    }

    #[test]
    fn deterministic() {
        let a = create_batches(&dataset(24), &StudyConfig::default()).unwrap();
        let b = create_batches(&dataset(24), &StudyConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
