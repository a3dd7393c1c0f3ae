//! Periodic orbits, multipliers, maximal-entropy sampling and Julia clouds.

mod periodic;
mod sampling;

use thiserror::Error;

pub use periodic::{
    cycle_multiplier, periodic_points, real_multiplier_test, MultiplierRow, Offender, PeriodicOrbit, PeriodicSolver,
    RealMultiplierReport, Stability, NEUTRAL_BAND, PERIODIC_DEGREE_CAP, PERIOD_CLUSTER_RADIUS,
};
pub use sampling::{
    backward_sample, backward_sample_from, julia_cloud, lyapunov_exponent, write_cloud_csv, ErgodicEstimates,
    MaxEntropySample, BURN_IN, CLOUD_GRID,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("degree {0} is too low for these dynamics")]
    DegreeTooLow(usize),
    #[error("period {period} exceeds the degree cap")]
    DegreeCapExceeded { period: usize },
    #[error("root finding failed for period {period}")]
    RootFindingFailed { period: usize },
    #[error("preimage solve failed")]
    PreimageSolveFailed,
    #[error("derivative vanishes on a sample point")]
    DerivativeSingular,
    #[error("empty sample")]
    EmptySample,
}
