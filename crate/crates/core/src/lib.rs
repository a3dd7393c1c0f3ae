//! Numerical toolkit for rational maps of the Riemann sphere whose repelling
//! cycles have real multipliers.
//!
//! The crate is organized bottom-up:
//!
//! * [`algebra`] - polynomials, rational maps, Möbius maps, the expression parser.
//! * [`roots`] - simultaneous (Aberth-Ehrlich) root finding.
//! * [`dynamics`] - periodic orbits and multipliers, backward sampling of the
//!   maximal-entropy measure, Lyapunov exponents.
//! * [`geometry`] - generalized circles: fitting, residuals, invariance.
//! * [`linearizer`] - Poincaré (linearizing) functions at repelling fixed points.
//! * [`classifier`] - the real-multiplier / circle / Lattès verdicts and the
//!   three-way case analysis for maps with Julia set in a circle.
//! * [`realjulia`] - polynomials with prescribed critical values and real Julia
//!   set, and the worked example families.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x < y)` deliberately rejects NaN

pub mod algebra;
pub mod classifier;
pub mod dynamics;
pub mod geometry;
pub mod linearizer;
pub mod par;
pub mod realjulia;
pub mod roots;

pub use algebra::{Moebius, Poly, RationalMap, SpherePoint};
pub use num_complex::Complex64;
