use std::collections::HashMap;
use std::sync::Arc;

use chrono::{DateTime, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::matrix::Rater;
use super::{ClampPolicy, SimError};
use crate::corpus::{GoldLabel, StudyDataset};
use crate::service::{
    CompletionStatus, Dimension, ExportFormat, FixedClock, RatingItem, RatingRecord, SeededTokens,
    ServiceError, StudyConfig, StudyService,
};

/// Where a sentence's true score is centred.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanModel {
    /// One grand mean for every sentence.
    Constant(f64),
    /// Separate means for GENERIC and NON-GENERIC sentences.
    ByGold { generic: f64, non_generic: f64 },
}

/// Rater model for one dimension of a simulated study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DimensionSim {
    pub mean: MeanModel,
    pub sigma_item: f64,
    pub sigma_noise: f64,
    pub clamp: ClampPolicy,
    pub seed: u64,
}

impl Default for DimensionSim {
    fn default() -> Self {
        Self {
            mean: MeanModel::Constant(0.5),
            sigma_item: 0.15,
            sigma_noise: 0.15,
            clamp: ClampPolicy::ClampToUnit,
            seed: 0,
        }
    }
}

impl DimensionSim {
    fn validate(&self) -> Result<(), SimError> {
        let means = match self.mean {
            MeanModel::Constant(m) => vec![m],
            MeanModel::ByGold {
                generic,
                non_generic,
            } => vec![generic, non_generic],
        };
        if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(SimError::InvalidConfig(format!(
                "means {means:?} not in [0, 1]"
            )));
        }
        for (name, s) in [
            ("sigma_item", self.sigma_item),
            ("sigma_noise", self.sigma_noise),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} = {s} must be >= 0"
                )));
            }
        }
        Ok(())
    }

    fn centre(&self, gold: GoldLabel) -> f64 {
        match (self.mean, gold) {
            (MeanModel::Constant(m), _) => m,
            (MeanModel::ByGold { generic, .. }, GoldLabel::Generic) => generic,
            (MeanModel::ByGold { non_generic, .. }, GoldLabel::NonGeneric) => non_generic,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudySim {
    pub study: StudyConfig,
    pub inclusiveness: DimensionSim,
    pub abstractness: DimensionSim,
    /// Seed for rater tokens.
    pub token_seed: u64,
    /// Timestamp stamped on every rating, so exports are reproducible.
    pub submitted_at: DateTime<Utc>,
}

impl Default for StudySim {
    fn default() -> Self {
        Self {
            study: StudyConfig::default(),
            inclusiveness: DimensionSim::default(),
            abstractness: DimensionSim {
                seed: 1,
                ..DimensionSim::default()
            },
            token_seed: 0,
            submitted_at: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
        }
    }
}

impl StudySim {
    fn for_dimension(&self, d: Dimension) -> &DimensionSim {
        match d {
            Dimension::Inclusiveness => &self.inclusiveness,
            Dimension::Abstractness => &self.abstractness,
        }
    }
}

/// Outcome of a simulated study.
#[derive(Clone, Debug)]
pub struct SimulatedStudy {
    /// Export CSV exactly as the service emits it.
    pub export_csv: String,
    pub records: Vec<RatingRecord>,
    pub status: CompletionStatus,
    /// Planted true score per (sentence_id, dimension).
    pub true_scores: HashMap<(String, Dimension), f64>,
}

/// Runs a complete study against an in-process [`StudyService`]: raters
/// register until every slot is taken, and each submits its batch one
/// group at a time. Deterministic for a given configuration.
pub fn simulate_study(dataset: &StudyDataset, sim: &StudySim) -> Result<SimulatedStudy, SimError> {
    let service = StudyService::with_sources(
        dataset.clone(),
        sim.study.clone(),
        Arc::new(FixedClock(sim.submitted_at)),
        Arc::new(SeededTokens::new(sim.token_seed)),
    )?;
    run(&service, sim)
}

/// Drives an existing service to completion.
pub fn run(service: &StudyService, sim: &StudySim) -> Result<SimulatedStudy, SimError> {
    let mut true_scores = HashMap::new();
    let mut raters: HashMap<Dimension, (ChaCha8Rng, Rater)> = HashMap::new();
    let n_sentences = service.dataset().n_sentences();
    for d in Dimension::ALL {
        let cfg = sim.for_dimension(d);
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let item_noise = Normal::new(0.0, cfg.sigma_item).expect("validated sigma");
        for s in service.dataset().sentences() {
            let tau = cfg.centre(s.gold) + item_noise.sample(&mut rng);
            true_scores.insert((s.id.clone(), d), tau);
        }
        let rater = Rater::new(cfg.sigma_noise, cfg.clamp, n_sentences * sim.study.k);
        raters.insert(d, (rng, rater));
    }

    loop {
        let registration = match service.register_rater() {
            Ok(r) => r,
            Err(ServiceError::StudyFull) => break,
            Err(e) => return Err(e.into()),
        };
        let task = service.get_task(&registration.rater_id)?;
        let (rng, rater) = raters.get_mut(&task.dimension).expect("both dimensions");
        for group in &task.groups {
            let items = group
                .sentences
                .iter()
                .map(|s| {
                    let tau = true_scores[&(s.sentence_id.clone(), task.dimension)];
                    Ok(RatingItem {
                        sentence_id: s.sentence_id.clone(),
                        value: rater.rate(tau, rng)?,
                    })
                })
                .collect::<Result<Vec<_>, SimError>>()?;
            service.submit_ratings(&registration.rater_id, &group.group_id, items)?;
        }
    }

    Ok(SimulatedStudy {
        export_csv: service.export(ExportFormat::Csv)?,
        records: service.records(),
        status: service.completion_status(),
        true_scores,
    })
}
