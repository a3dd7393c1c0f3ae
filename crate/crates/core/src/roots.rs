//! Simultaneous polynomial root finding (Aberth-Ehrlich).
//!
//! The solver works against [`RootTarget`], which only has to report the
//! polynomial value, its derivative and a rounding-noise estimate at a point.
//! Dense [`Poly`] values implement it via Horner's scheme; the periodic-point
//! equations in [`crate::dynamics`] implement it by iterating the map, which
//! avoids ever expanding `f^n(z) - z` into (badly conditioned) coefficients.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::Poly;
use crate::par;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 500;
pub const CLUSTER_RADIUS: f64 = 1e-6;
pub const DEFAULT_SEED: u64 = 0x00c1_2c1e;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("polynomial has degree zero")]
    ConstantPolynomial,
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize, best: Vec<Complex64> },
    #[error("Newton iteration stalled at {at}")]
    Stalled { at: Complex64 },
}

/// Value, derivative and rounding-noise level of a polynomial at a point.
/// Value and derivative may share any common nonzero scale factor.
#[derive(Clone, Copy, Debug)]
pub struct Evaluation {
    pub value: Complex64,
    pub derivative: Complex64,
    pub noise: f64,
}

pub trait RootTarget: Sync {
    fn degree(&self) -> usize;
    fn evaluate(&self, z: Complex64) -> Evaluation;
}

impl RootTarget for Poly {
    fn degree(&self) -> usize {
        Poly::degree(self)
    }

    fn evaluate(&self, z: Complex64) -> Evaluation {
        let (value, derivative) = self.eval_with_derivative(z);
        let n = Poly::degree(self) as f64;
        let noise = 2.0 * (n + 1.0) * f64::EPSILON * self.eval_abs(z.norm());
        Evaluation { value, derivative, noise }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub cluster_radius: f64,
    pub seed: u64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            max_iterations: MAX_ITERATIONS,
            cluster_radius: CLUSTER_RADIUS,
            seed: DEFAULT_SEED,
        }
    }
}

/// All roots of a polynomial, sorted by `(re, im)`.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    /// Size of the cluster each root belongs to.
    pub multiplicities: Vec<usize>,
    /// `|P(r)|` per root (in the target's own scaling).
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Cauchy bound `1 + max |c_k / c_n|`.
pub fn cauchy_radius(p: &Poly) -> f64 {
    let lead = p.leading().norm();
    1.0 + p.coeffs()[..p.degree()].iter().fold(0.0_f64, |m, c| m.max(c.norm() / lead))
}

/// Starting points on a circle, rotated by a seeded random offset and
/// jittered in angle so no symmetry of the polynomial is inherited.
pub fn circle_start(n: usize, radius: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: f64 = rng.gen_range(0.0..TAU);
    (0..n)
        .map(|k| {
            let jitter: f64 = rng.gen_range(-0.25..0.25);
            let theta = offset + (k as f64 + 0.5 + jitter) * TAU / n as f64;
            Complex64::from_polar(radius, theta)
        })
        .collect()
}

/// Finds all roots of `p` with default options and the given relative tolerance.
pub fn all_roots(p: &Poly, tol: f64) -> Result<RootSet, RootError> {
    all_roots_with(p, &RootOptions { tol, ..RootOptions::default() })
}

pub fn all_roots_with(p: &Poly, opts: &RootOptions) -> Result<RootSet, RootError> {
    let n = p.degree();
    if n == 0 {
        return Err(RootError::ConstantPolynomial);
    }
    let mut roots = if n == 1 {
        vec![-p.coeff(0) / p.coeff(1)]
    } else {
        let start = circle_start(n, cauchy_radius(p), opts.seed);
        let (roots, converged, iterations) = aberth(p, start, opts);
        if !converged {
            return Err(RootError::NoConvergence { iterations, best: roots });
        }
        roots
    };
    roots = par::map_slice(&roots, |&z| polish(p, z, 3));
    Ok(finish(p, roots, opts, true, 0))
}

/// Runs Aberth-Ehrlich iterations from `start`; returns the iterates, a
/// convergence flag and the iteration count.
///
/// Updates are Jacobi-style (every correction uses the previous sweep), so
/// the result does not depend on how the sweep is scheduled across threads.
pub fn aberth<T: RootTarget + ?Sized>(
    target: &T,
    start: Vec<Complex64>,
    opts: &RootOptions,
) -> (Vec<Complex64>, bool, usize) {
    let n = start.len();
    let mut z = start;
    let mut done = vec![false; n];
    for iter in 1..=opts.max_iterations {
        let current = &z;
        let flags = &done;
        let updates: Vec<(Complex64, bool)> = par::map_range(n, |i| {
            let zi = current[i];
            if flags[i] {
                return (zi, true);
            }
            let e = target.evaluate(zi);
            if e.value.norm() <= e.noise {
                return (zi, true);
            }
            let ratio = e.value / e.derivative;
            let sum: Complex64 = current
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &zj)| (zi - zj).inv())
                .sum();
            let mut w = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !(w.re.is_finite() && w.im.is_finite()) {
                // derivative vanished: nudge off the flat spot
                w = Complex64::new(1e-3 * (1.0 + zi.norm()), 0.0);
            }
            let next = zi - w;
            let small = w.norm() <= opts.tol * zi.norm().max(1e-3);
            (next, small)
        });
        for (i, (next, conv)) in updates.into_iter().enumerate() {
            z[i] = next;
            done[i] = conv;
        }
        if done.iter().all(|&d| d) {
            return (z, true, iter);
        }
    }
    (z, false, opts.max_iterations)
}

/// A few multiplicity-aware Newton steps; never returns a worse iterate.
fn polish(p: &Poly, z0: Complex64, steps: usize) -> Complex64 {
    newton_refine(p, z0, steps).unwrap_or(z0)
}

/// Sorts, clusters and scores a converged root list.
pub fn finish<T: RootTarget + ?Sized>(
    target: &T,
    roots: Vec<Complex64>,
    opts: &RootOptions,
    converged: bool,
    iterations: usize,
) -> RootSet {
    let radii: Vec<f64> = roots.iter().map(|r| opts.cluster_radius * r.norm().max(1.0)).collect();
    finish_with_radii(target, roots, radii, converged, iterations)
}

/// Like [`finish`], but two roots merge when their distance is within the
/// larger of their individual radii.
pub fn finish_with_radii<T: RootTarget + ?Sized>(
    target: &T,
    roots: Vec<Complex64>,
    radii: Vec<f64>,
    converged: bool,
    iterations: usize,
) -> RootSet {
    let mut paired: Vec<(Complex64, f64)> = roots.into_iter().zip(radii).collect();
    paired.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    let (roots, radii): (Vec<Complex64>, Vec<f64>) = paired.into_iter().unzip();
    let n = roots.len();
    // union-find over pairs closer than the cluster radius
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (roots[i] - roots[j]).norm() <= radii[i].max(radii[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let groups: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut multiplicities = vec![1; n];
    let mut centroids = roots.clone();
    for i in 0..n {
        let members: Vec<usize> = (0..n).filter(|&j| groups[j] == groups[i]).collect();
        multiplicities[i] = members.len();
        if members.len() > 1 {
            let sum: Complex64 = members.iter().map(|&j| roots[j]).sum();
            centroids[i] = sum / members.len() as f64;
        }
    }
    let roots = centroids;
    let residuals = par::map_slice(&roots, |&r| {
        let e = target.evaluate(r);
        e.value.norm()
    });
    RootSet { roots, multiplicities, residuals, converged, iterations }
}

/// Newton refinement of a single root with multiplicity-aware steps.
///
/// The local multiplicity is estimated as `|p'|^2 / |p'^2 - p p''|` and the
/// step scaled by it, so clustered roots still converge quickly. The best
/// iterate by `|p|` is returned.
pub fn newton_refine(p: &Poly, z0: Complex64, steps: usize) -> Result<Complex64, RootError> {
    let dp = p.derivative();
    let ddp = dp.derivative();
    let deg = p.degree().max(1) as f64;
    let mut z = z0;
    let mut best = (z0, p.eval(z0).norm());
    if best.1 == 0.0 {
        return Ok(z0);
    }
    for k in 0..steps {
        let v = p.eval(z);
        if v == Complex64::new(0.0, 0.0) {
            return Ok(z);
        }
        let d1 = dp.eval(z);
        if d1.norm() == 0.0 {
            if k == 0 {
                return Err(RootError::Stalled { at: z });
            }
            break;
        }
        let d2 = ddp.eval(z);
        let denom = (d1 * d1 - v * d2).norm();
        let m = if denom > 0.0 { (d1.norm_sqr() / denom).round().clamp(1.0, deg) } else { 1.0 };
        let next = z - v / d1 * m;
        if !(next.re.is_finite() && next.im.is_finite()) {
            break;
        }
        z = next;
        let r = p.eval(z).norm();
        if r < best.1 {
            best = (z, r);
        }
        if r == 0.0 {
            break;
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cube_roots_of_unity() {
        let p = Poly::from_real(&[-1.0, 0.0, 0.0, 1.0]);
        let rs = all_roots(&p, 1e-12).unwrap();
        assert_eq!(rs.roots.len(), 3);
        for r in &rs.roots {
            assert!((r.powu(3) - 1.0).norm() < 1e-12);
        }
        assert!(rs.residuals.iter().all(|&r| r < 1e-12));
    }

    #[test]
    fn period_two_equation_of_square() {
        // z^4 - z = z (z^3 - 1)
        let p = Poly::from_real(&[0.0, -1.0, 0.0, 0.0, 1.0]);
        let rs = all_roots(&p, 1e-12).unwrap();
        let expect = [c(0.0, 0.0), c(1.0, 0.0), Complex64::from_polar(1.0, TAU / 3.0), Complex64::from_polar(1.0, -TAU / 3.0)];
        for e in expect {
            assert!(rs.roots.iter().any(|r| (r - e).norm() < 1e-12), "missing {e}");
        }
    }

    #[test]
    fn double_root_is_clustered() {
        let p = Poly::from_real(&[0.25, -1.0, 1.0]);
        let rs = all_roots(&p, 1e-12).unwrap();
        assert_eq!(rs.multiplicities, vec![2, 2]);
        for r in &rs.roots {
            assert!((r - 0.5).norm() < 1e-7);
        }
    }

    #[test]
    #[allow(clippy::approx_constant)] // a start just short of the root
    fn newton_on_sqrt_two() {
        let p = Poly::from_real(&[-2.0, 0.0, 1.0]);
        let r = newton_refine(&p, c(1.4, 0.0), 8).unwrap();
        assert!((r.re - 2f64.sqrt()).abs() < 1e-12);
        let start = c(1.414213562, 0.0);
        let r = newton_refine(&p, start, 5).unwrap();
        assert!((r - start).norm() < 1e-8);
        assert!(p.eval(r).norm() <= p.eval(start).norm());
    }

    #[test]
    fn newton_on_triple_root() {
        let p = Poly::from_real(&[-1.0, 3.0, -3.0, 1.0]);
        let start = c(1.1, 0.0);
        let r = newton_refine(&p, start, 10).unwrap();
        assert!((r - 1.0).norm() < 1e-4);
        // plain Newton would only reach 1 + 0.1 (2/3)^10 ~ 1.0017
        assert!((r - 1.0).norm() < 0.1 * (2.0f64 / 3.0).powi(10));
    }

    #[test]
    fn newton_stalls_on_flat_start() {
        let p = Poly::from_real(&[1.0, 0.0, 1.0]);
        assert!(matches!(newton_refine(&p, c(0.0, 0.0), 3), Err(RootError::Stalled { .. })));
    }

    #[test]
    fn constant_rejected() {
        assert_eq!(all_roots(&Poly::from_real(&[2.0]), 1e-12).unwrap_err(), RootError::ConstantPolynomial);
    }
}
