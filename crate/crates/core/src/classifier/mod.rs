//! Verdicts for maps whose repelling multipliers are real: Julia set in a
//! circle (with the three-way case split) or a Lattès map.

mod postcritical;
mod theorem;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Moebius, SpherePoint};
use crate::dynamics::{DynamicsError, RealMultiplierReport};
use crate::geometry::{GeneralizedCircle, GeometryError};

pub use postcritical::{
    detect_exceptional, detect_from_analysis, distinct_critical_points, postcritical_analysis, CriticalOrbit,
    PostcriticalAnalysis, PostcriticalPoint, Weight, DEFAULT_DEPTH, RECURRENCE_TOLERANCE,
};
pub use theorem::{critical_escape_times, theorem1_verdict, theorem1_verdict_with, theorem2_classify, theorem2_classify_with};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("escape times need an interval case")]
    NotIntervalCase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    CircleCaseI,
    CircleCaseIi,
    CircleCaseIii,
    Lattes,
    PowerConjugate,
    ChebyshevConjugate,
    NoRealStructure,
    Inconclusive,
}

impl Verdict {
    /// Process exit code for the command-line front end.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Inconclusive => 3,
            Verdict::NoRealStructure => 4,
            _ => 0,
        }
    }

    pub fn is_circle_case(self) -> bool {
        matches!(self, Verdict::CircleCaseI | Verdict::CircleCaseIi | Verdict::CircleCaseIii)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Exceptional {
    Power,
    Chebyshev,
    Lattes,
    None,
}

/// Outcome of following one critical point in `I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeTime {
    /// Critical point, in the interval chart.
    pub point: f64,
    /// Least `N` with `f^N(x)` outside the open interval; absent when the
    /// cap was reached.
    pub escape: Option<usize>,
    pub preperiodic: bool,
    pub capped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseOneDetail {
    /// The Julia set fills the circle (otherwise it is a Cantor subset).
    pub julia_is_circle: bool,
    /// Largest gap between cloud points, as a fraction of the circle.
    pub max_gap_fraction: f64,
    /// `f` exchanges the two complementary discs.
    pub swaps_components: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub circle: Option<f64>,
    pub cloud_size: usize,
    pub forward_invariance: Option<f64>,
    pub preimage: Option<f64>,
    pub complete_invariance: Option<bool>,
    /// `max(sup f(I) - b, a - inf f(I))`; negative or tiny in case (ii).
    pub interval_margin: Option<f64>,
    /// Largest gap of the real cloud inside `I`, relative to `|I|`.
    pub interval_max_gap: Option<f64>,
    /// `max |f(e) - e'|` over the polished endpoint relations.
    pub endpoint_residual: Option<f64>,
}

/// Classification outcome with all supporting evidence. Field order is
/// the JSON field order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub circle: Option<GeneralizedCircle>,
    /// Moebius map taking the circle to the extended real line.
    pub normalizer: Option<Moebius>,
    /// Chart (normalizer followed by the interval chart) in which
    /// `interval_i` and the escape points are expressed.
    pub interval_chart: Option<Moebius>,
    pub interval_i: Option<(f64, f64)>,
    /// Base fixed point, in normalizer coordinates (on the extended real line).
    pub x0: Option<SpherePoint>,
    pub lambda_x0: Option<f64>,
    pub escape_times: Vec<EscapeTime>,
    pub case_i: Option<CaseOneDetail>,
    pub exceptional: Option<Exceptional>,
    pub residuals: Residuals,
    pub real_multiplier: Option<RealMultiplierReport>,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    fn empty(verdict: Verdict) -> Self {
        Self {
            verdict,
            circle: None,
            normalizer: None,
            interval_chart: None,
            interval_i: None,
            x0: None,
            lambda_x0: None,
            escape_times: Vec::new(),
            case_i: None,
            exceptional: None,
            residuals: Residuals::default(),
            real_multiplier: None,
            notes: Vec::new(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

/// Tunables for the classifier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierOptions {
    pub n_max: usize,
    /// Tolerance of the real-multiplier test.
    pub tol: f64,
    pub seed: u64,
    pub cloud_size: usize,
    pub escape_cap: usize,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        Self { n_max: 6, tol: 1e-8, seed: 20_240_517, cloud_size: 20_000, escape_cap: 64 }
    }
}
