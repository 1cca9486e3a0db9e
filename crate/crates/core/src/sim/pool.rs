use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Concreteness, GoldLabel, Lexicon, Sentence, TargetSpan};

/// Shape of a synthetic candidate corpus. The default mirrors a 60-noun
/// study of 324 sentences (159 GENERIC / 165 NON-GENERIC, 42 concrete nouns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoolSpec {
    pub n_lemmas: usize,
    /// Fraction of lemmas scored above the concreteness threshold.
    pub concrete_share: f64,
    pub n_generic: usize,
    pub n_non_generic: usize,
    pub size_min: usize,
    pub size_max: usize,
    pub seed: u64,
}

impl Default for PoolSpec {
    fn default() -> Self {
        Self {
            n_lemmas: 60,
            concrete_share: 0.70,
            n_generic: 159,
            n_non_generic: 165,
            size_min: 4,
            size_max: 8,
            seed: 0,
        }
    }
}

/// Candidate sentences (concreteness already joined) plus the lexicon used.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticPool {
    pub sentences: Vec<Sentence>,
    pub lexicon: Lexicon,
}

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Pronounceable, unique pseudo-noun for index `i`.
fn pseudo_noun(i: usize) -> String {
    let mut n = i;
    let mut word = String::new();
    for _ in 0..3 {
        word.push_str(ONSETS[n % ONSETS.len()]);
        n /= ONSETS.len();
        word.push_str(VOWELS[n % VOWELS.len()]);
        n /= VOWELS.len();
    }
    if n > 0 {
        word.push_str(&n.to_string());
    }
    word
}

const GENERIC_FRAMES: [&str; 4] = [
    "A {} usually lives for many years.",
    "Every {} needs some care.",
    "The {} is found on every continent.",
    "Any {} can be recognised by its shape.",
];
const NON_GENERIC_FRAMES: [&str; 4] = [
    "Yesterday the {} in our yard broke.",
    "She bought a {} at the market.",
    "That {} was on the table this morning.",
    "My neighbour lost her {} last week.",
];

fn frame(template: &str, noun: &str) -> (String, TargetSpan) {
    let (before, after) = template.split_once("{}").expect("frame has a slot");
    let start = before.chars().count();
    let span = TargetSpan::new(start, start + noun.chars().count());
    (format!("{before}{noun}{after}"), span)
}

/// Builds a candidate pool with exactly the requested lemma and label counts.
/// Every lemma gets at least one sentence of each label and a size within
/// `[size_min, size_max]`.
///
/// # Panics
/// If the counts cannot be met under those constraints.
pub fn synthetic_pool(spec: &PoolSpec) -> SyntheticPool {
    let n = spec.n_lemmas;
    let total = spec.n_generic + spec.n_non_generic;
    assert!(n > 0 && spec.size_min >= 2 && spec.size_min <= spec.size_max);
    assert!(
        (n * spec.size_min..=n * spec.size_max).contains(&total),
        "{total} sentences do not fit {n} lemmas of size {}..={}",
        spec.size_min,
        spec.size_max
    );
    assert!(
        spec.n_generic >= n && spec.n_non_generic >= n,
        "each lemma needs both labels"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Even split, then random unit moves that respect the size bounds.
    let mut sizes: Vec<usize> = (0..n)
        .map(|i| total / n + usize::from(i < total % n))
        .collect();
    for _ in 0..4 * n {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b && sizes[a] > spec.size_min && sizes[b] < spec.size_max {
            sizes[a] -= 1;
            sizes[b] += 1;
        }
    }

    // One sentence of each label per lemma, the remaining GENERIC ones spread
    // over free capacity.
    let mut generic = vec![1usize; n];
    let mut free: Vec<usize> = (0..n)
        .flat_map(|i| std::iter::repeat_n(i, sizes[i] - 2))
        .collect();
    free.shuffle(&mut rng);
    for &i in &free[..spec.n_generic - n] {
        generic[i] += 1;
    }

    let n_concrete = (spec.concrete_share * n as f64).round() as usize;
    let mut concrete: Vec<bool> = (0..n).map(|i| i < n_concrete).collect();
    concrete.shuffle(&mut rng);

    let mut sentences = Vec::with_capacity(total);
    let mut lexicon = Lexicon::new();
    for i in 0..n {
        let lemma = pseudo_noun(i);
        let score = if concrete[i] {
            rng.random_range(3.5..=5.0)
        } else {
            rng.random_range(1.0..=2.8)
        };
        let score = Concreteness::new((score * 100.0_f64).round() / 100.0).expect("in range");
        lexicon.insert(lemma.clone(), score);
        for j in 0..sizes[i] {
            let (gold, frames) = if j < generic[i] {
                (GoldLabel::Generic, &GENERIC_FRAMES)
            } else {
                (GoldLabel::NonGeneric, &NON_GENERIC_FRAMES)
            };
            let (text, span) = frame(frames[rng.random_range(0..frames.len())], &lemma);
            sentences.push(
                Sentence::new(format!("s{:05}", sentences.len()), text, &lemma, span, gold)
                    .expect("frame span fits")
                    .with_concreteness(score),
            );
        }
    }
    SyntheticPool { sentences, lexicon }
}

impl SyntheticPool {
    /// Tab-separated corpus in the format read by `load_corpus`.
    pub fn corpus_tsv(&self) -> String {
        let mut out = String::from("id\ttext\tspan_start\tspan_end\tlemma\tgold\n");
        for s in &self.sentences {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                s.id,
                s.text,
                s.target_span.start,
                s.target_span.end,
                s.lemma,
                s.gold.as_str()
            ));
        }
        out
    }

    /// Comma-separated lexicon in the format read by `load_lexicon`.
    pub fn lexicon_csv(&self) -> String {
        let mut out = String::from("lemma,concreteness\n");
        for (lemma, c) in &self.lexicon {
            out.push_str(&format!("{lemma},{}\n", c.value()));
        }
        out
    }
}
