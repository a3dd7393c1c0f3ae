//! Constructive side: polynomials with prescribed critical values and
//! real Julia set, and the three worked families of maps whose Julia set
//! lies on the real line without the line being completely invariant.

mod construct;
mod examples;

use thiserror::Error;

use crate::classifier::ClassifierError;
use crate::dynamics::DynamicsError;

pub use construct::{check_sign_condition, construct_polynomial, ConstructedPolynomial, CriticalValueSpec, NEWTON_CAP};
pub use examples::{
    build_example, ex1_blaschke_threshold, ex1_completely_invariant, ex3_convergence, verify_example_claims, Claim,
    ClaimStatus, ClaimsReport, ConvergenceRow, Ex3Construction, ExampleInstance, ExampleSpec, ThresholdReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealJuliaError {
    #[error("critical value specification rejected: {0}")]
    SpecViolation(String),
    #[error("Newton continuation did not converge (last residuals {:?})", trace.iter().rev().take(5).collect::<Vec<_>>())]
    NewtonDiverged { trace: Vec<f64> },
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("construction of the third example failed: {0}")]
    Ex3ConstructionFailed(String),
    #[error("root finding failed")]
    RootFindingFailed,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}
