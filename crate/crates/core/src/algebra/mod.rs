//! Exact-degree polynomial and rational-map arithmetic on the Riemann sphere.

mod moebius;
mod parser;
mod poly;
mod rational;
mod sphere;

use thiserror::Error;

pub use moebius::Moebius;
pub use parser::parse_map;
pub use poly::{Poly, DROP_TOLERANCE};
pub use rational::{CoefficientFile, HomogeneousValue, RationalMap, COPRIMALITY_TOLERANCE, DEFAULT_DEGREE_CAP};
pub use sphere::{Chart, SpherePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("degree {degree} exceeds the cap {cap}")]
    DegreeCapExceeded { degree: usize, cap: usize },
    #[error("denominator is identically zero")]
    ZeroDenominator,
    #[error("degenerate Moebius transformation")]
    DegenerateMoebius,
    #[error("root finding failed")]
    RootFindingFailed,
    #[error("map is not odd")]
    NotOdd,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("division by the zero polynomial at byte {offset}")]
    DivisionByZeroPolynomial { offset: usize },
}
