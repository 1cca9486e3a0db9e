use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::stats::RatingMatrix;

/// What to do with a rating that falls outside [0, 1].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampPolicy {
    #[default]
    ClampToUnit,
    /// Redraw the rater noise; fails if more than half of all draws land outside.
    RejectOutOfRange,
}

/// Gaussian true-score-plus-noise rater model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_items: usize,
    pub k: usize,
    /// Standard deviation of item true scores.
    pub sigma_item: f64,
    /// Standard deviation of a single rater's error.
    pub sigma_noise: f64,
    pub mean: f64,
    pub clamp: ClampPolicy,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_items: 324,
            k: 30,
            sigma_item: 0.15,
            sigma_noise: 0.15,
            mean: 0.5,
            clamp: ClampPolicy::ClampToUnit,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.sigma_item >= 0.0 && self.sigma_item.is_finite()) {
            return bad(format!("sigma_item = {} must be >= 0", self.sigma_item));
        }
        if !(self.sigma_noise >= 0.0 && self.sigma_noise.is_finite()) {
            return bad(format!("sigma_noise = {} must be >= 0", self.sigma_noise));
        }
        if !(0.0..=1.0).contains(&self.mean) {
            return bad(format!("mean = {} not in [0, 1]", self.mean));
        }
        Ok(())
    }

    /// Population ICC(1) of the model before unit-interval handling.
    pub fn population_icc(&self) -> f64 {
        let b = self.sigma_item.powi(2);
        b / (b + self.sigma_noise.powi(2))
    }
}

/// Draws unit-interval ratings around given true scores.
pub(crate) struct Rater {
    noise: Normal<f64>,
    clamp: ClampPolicy,
    accepted: usize,
    rejected: usize,
    /// Rejections allowed before the run counts as a failure.
    budget: usize,
}

impl Rater {
    pub(crate) fn new(sigma_noise: f64, clamp: ClampPolicy, expected_draws: usize) -> Self {
        Self {
            noise: Normal::new(0.0, sigma_noise).expect("validated sigma"),
            clamp,
            accepted: 0,
            rejected: 0,
            budget: expected_draws,
        }
    }

    pub(crate) fn rate(&mut self, truth: f64, rng: &mut impl Rng) -> Result<f64, SimError> {
        loop {
            let x = truth + self.noise.sample(rng);
            match self.clamp {
                ClampPolicy::ClampToUnit => return Ok(x.clamp(0.0, 1.0)),
                ClampPolicy::RejectOutOfRange if (0.0..=1.0).contains(&x) => {
                    self.accepted += 1;
                    return Ok(x);
                }
                ClampPolicy::RejectOutOfRange => {
                    self.rejected += 1;
                    // Once rejections exceed the number of ratings wanted,
                    // more than half of all draws were rejected.
                    if self.rejected > self.budget {
                        return Err(SimError::IncompatibleWithUnitInterval {
                            rejected: self.rejected,
                            accepted: self.accepted,
                        });
                    }
                }
            }
        }
    }
}

/// Item true scores τᵢ ~ N(mean, σ_item²); ratings τᵢ + N(0, σ_noise²).
pub fn simulate_matrix(config: &SimConfig) -> Result<RatingMatrix, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let item = Normal::new(config.mean, config.sigma_item).expect("validated sigma");
    let truth: Vec<f64> = (0..config.n_items).map(|_| item.sample(&mut rng)).collect();
    let mut rater = Rater::new(config.sigma_noise, config.clamp, config.n_items * config.k);
    let rows = truth
        .iter()
        .map(|&t| (0..config.k).map(|_| rater.rate(t, &mut rng)).collect())
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    Ok(RatingMatrix::from_rows(rows)?)
}
