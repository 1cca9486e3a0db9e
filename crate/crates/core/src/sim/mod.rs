//! Synthetic raters and corpora with known ground truth, for exercising the
//! service and the statistics without human annotators.

mod matrix;
mod pool;
mod study;

use thiserror::Error;

pub use matrix::{simulate_matrix, ClampPolicy, SimConfig};
pub use pool::{synthetic_pool, PoolSpec, SyntheticPool};
pub use study::{run, simulate_study, DimensionSim, MeanModel, SimulatedStudy, StudySim};

use crate::service::ServiceError;
use crate::stats::StatsError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("parameters incompatible with unit interval ({rejected} draws rejected, {accepted} accepted)")]
    IncompatibleWithUnitInterval { rejected: usize, accepted: usize },
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
