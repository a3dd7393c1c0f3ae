//! Poincaré (linearizing) functions at repelling fixed points: the entire or
//! meromorphic `Ψ` with `Ψ(λz) = f(Ψ(z))`, `Ψ(0) = p`, `Ψ'(0) = 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Chart, Moebius, RationalMap, SpherePoint};
use crate::dynamics::{DynamicsError, PeriodicSolver, Stability};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 64;

const FIXED_TOLERANCE: f64 = 1e-10;
const REPELLING_MARGIN: f64 = 1e-6;
const POSTCRITICAL_DEPTH: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearizerError {
    #[error("base point is not fixed (|f(p) - p| = {0:e})")]
    NotFixed(f64),
    #[error("base point is a pole in its chart")]
    PoleAtBasePoint,
    #[error("fixed point is not repelling (|λ| = {0})")]
    NotRepelling(f64),
    #[error("resonance at order {0}")]
    ResonanceBreakdown(usize),
    #[error("too few radii before overflow")]
    InsufficientRadii,
    #[error("base point lies on a critical orbit")]
    BasePointPostcritical,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Truncated power series of `Ψ` in a chart where the base point is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearizerSeries {
    pub base_point: SpherePoint,
    pub multiplier: Complex64,
    /// `ψ_1, ..., ψ_M`; `ψ_1 = 1`.
    pub coeffs: Vec<Complex64>,
    pub conv_radius_estimate: f64,
    /// Coordinate change in which the series is expanded.
    chart: Moebius,
    center: Complex64,
}

/// External form of a series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesDump {
    pub p: SpherePoint,
    pub lambda: Complex64,
    pub coeffs: Vec<Complex64>,
}

impl LinearizerSeries {
    pub fn dump(&self) -> SeriesDump {
        SeriesDump { p: self.base_point, lambda: self.multiplier, coeffs: self.coeffs.clone() }
    }

    /// Truncated series and its derivative at `w`, in the series chart.
    fn series(&self, w: Complex64) -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut dv = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            let n = (k + 1) as f64;
            v = (v + c) * w;
            dv = dv * w + c * n;
        }
        (self.center + v, dv)
    }

    /// `Ψ(w)` from the truncated series alone, for `|w|` within the disk of
    /// convergence.
    pub fn eval_local(&self, w: Complex64) -> SpherePoint {
        self.chart.inverse().apply_complex(self.series(w).0)
    }

    // Point and derivative in the point's own bounded chart.
    fn eval_local_with_derivative(&self, w: Complex64) -> (SpherePoint, Complex64) {
        let (v, dv) = self.series(w);
        let inv = self.chart.inverse();
        let point = inv.apply_complex(v);
        let chart = Chart::of(point);
        let h = inv.as_rational_map().homogeneous_at(v, Chart::Origin);
        (point, h.image_derivative(chart) * dv)
    }

    fn safe_radius(&self) -> f64 {
        self.conv_radius_estimate / 4.0
    }
}

/// Taylor coefficients of `f(p + w)` up to `w^order` (index `k` holds the
/// coefficient of `w^k`).
pub fn local_taylor(f: &RationalMap, p: SpherePoint, order: usize) -> Result<Vec<Complex64>, LinearizerError> {
    let z = p.finite().ok_or(LinearizerError::PoleAtBasePoint)?;
    let num = f.num().shifted(z);
    let den = f.den().shifted(z);
    let d0 = den.coeff(0);
    if d0.norm() <= 1e-14 * den.max_abs_coeff() {
        return Err(LinearizerError::PoleAtBasePoint);
    }
    // series division num / den
    let mut q = vec![Complex64::new(0.0, 0.0); order + 1];
    for k in 0..=order {
        let mut acc = num.coeff(k);
        for j in 1..=k.min(den.degree()) {
            acc -= den.coeff(j) * q[k - j];
        }
        q[k] = acc / d0;
    }
    Ok(q)
}

fn chart_for(p: SpherePoint) -> Moebius {
    if p.is_infinite() {
        Moebius::inversion()
    } else {
        Moebius::identity()
    }
}

/// Series of the Poincaré function at the repelling fixed point `p`.
pub fn poincare_coeffs(f: &RationalMap, p: SpherePoint, order: usize) -> Result<LinearizerSeries, LinearizerError> {
    let chart = chart_for(p);
    let g = if p.is_infinite() { f.conjugate(&chart) } else { f.clone() };
    let center = chart.apply(p).finite().ok_or(LinearizerError::PoleAtBasePoint)?;
    let a = local_taylor(&g, SpherePoint::Finite(center), order)?;
    let drift = (a[0] - center).norm();
    if drift > FIXED_TOLERANCE * center.norm().max(1.0) {
        return Err(LinearizerError::NotFixed(drift));
    }
    let lambda = a[1];
    if lambda.norm() <= 1.0 + REPELLING_MARGIN {
        return Err(LinearizerError::NotRepelling(lambda.norm()));
    }
    // pow[k][n] = [z^n] W^k with W = Σ ψ_j z^j
    let zero = Complex64::new(0.0, 0.0);
    let mut pow = vec![vec![zero; order + 1]; order + 1];
    pow[1][1] = Complex64::new(1.0, 0.0);
    let mut lambda_n = lambda;
    for n in 2..=order {
        lambda_n *= lambda;
        let mut rhs = zero;
        for k in 2..=n {
            let mut acc = zero;
            for j in 1..=n - k + 1 {
                acc += pow[1][j] * pow[k - 1][n - j];
            }
            pow[k][n] = acc;
            rhs += a[k] * acc;
        }
        let gap = lambda_n - lambda;
        if gap.norm() < 1e-12 {
            return Err(LinearizerError::ResonanceBreakdown(n));
        }
        pow[1][n] = if lambda_n.is_finite() { rhs / gap } else { zero };
    }
    let coeffs: Vec<Complex64> = pow[1][1..].to_vec();
    let root_test = coeffs
        .iter()
        .enumerate()
        .skip(order / 2 - 1)
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| c.norm().powf(1.0 / (k + 1) as f64))
        .fold(0.0_f64, f64::max);
    let conv_radius_estimate = if root_test > 0.0 { (1.0 / root_test).min(1e6) } else { 1e6 };
    Ok(LinearizerSeries { base_point: p, multiplier: lambda, coeffs, conv_radius_estimate, chart, center })
}

/// Number of pullbacks by `λ` needed to bring `z` into the safe disk.
fn rescale_steps(s: &LinearizerSeries, z: Complex64) -> usize {
    let r = z.norm();
    let safe = s.safe_radius();
    if r <= safe {
        return 0;
    }
    ((r / safe).ln() / s.multiplier.norm().ln()).ceil().max(0.0) as usize
}

/// `Ψ(z) = f^n(Ψ(λ^{-n} z))` with `n` chosen so the series converges.
pub fn poincare_eval(s: &LinearizerSeries, f: &RationalMap, z: Complex64) -> SpherePoint {
    let n = rescale_steps(s, z);
    let w = z / s.multiplier.powu(n as u32);
    f.iterate(s.eval_local(w), n)
}

/// `Ψ(z)` together with `Ψ'(z)` in the bounded chart of `Ψ(z)`.
pub fn poincare_eval_with_derivative(s: &LinearizerSeries, f: &RationalMap, z: Complex64) -> (SpherePoint, Complex64) {
    let n = rescale_steps(s, z);
    let scale = s.multiplier.powu(n as u32);
    let (mut point, mut d) = s.eval_local_with_derivative(z / scale);
    d /= scale;
    for _ in 0..n {
        let next = f.eval(point);
        d *= f.chart_derivative(point, Chart::of(next));
        point = next;
    }
    (point, d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValironReport {
    pub rho_formula: f64,
    pub rho_measured: f64,
    pub radii: Vec<f64>,
    pub log_log_max: Vec<f64>,
    /// Set when `Ψ` is meromorphic rather than entire, where max-modulus
    /// growth only approximates the Nevanlinna order.
    pub heuristic: bool,
}

/// Order of growth of `Ψ`: `log d / log|λ|` against a regression of
/// `log log M(r)` on `log r` over radii `2^k`.
pub fn valiron_order(s: &LinearizerSeries, f: &RationalMap) -> Result<ValironReport, LinearizerError> {
    const ANGLES: usize = 64;
    let rho_formula = (f.degree() as f64).ln() / s.multiplier.norm().ln();
    let mut radii = Vec::new();
    let mut log_log_max = Vec::new();
    for k in 4..=60 {
        let r = 2f64.powi(k);
        let mut max: f64 = 0.0;
        for j in 0..ANGLES {
            let z = Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / ANGLES as f64);
            max = max.max(match poincare_eval(s, f, z) {
                SpherePoint::Finite(v) => v.norm(),
                SpherePoint::Infinity => f64::INFINITY,
            });
        }
        if !(max.is_finite() && max < 1e300) {
            break;
        }
        if max > std::f64::consts::E {
            radii.push(r);
            log_log_max.push(max.ln().ln());
        }
    }
    if radii.len() < 3 {
        return Err(LinearizerError::InsufficientRadii);
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = log_log_max.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&log_log_max).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let heuristic = !(f.is_polynomial() && !s.base_point.is_infinite());
    Ok(ValironReport { rho_formula, rho_measured: sxy / sxx, radii, log_log_max, heuristic })
}

/// True when `p` lies on the forward orbit of a critical point.
pub fn is_postcritical(f: &RationalMap, p: SpherePoint, depth: usize) -> bool {
    let crit = f.critical_points().unwrap_or_default();
    crit.iter().any(|c| {
        let mut q = *c;
        (0..depth).any(|_| {
            q = f.eval(q);
            q.chordal_distance(&p) < 1e-9
        })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Witness {
    pub z: Complex64,
    /// Chordal distance from `Ψ(z)` to the base point.
    pub residual: f64,
    pub derivative_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub witnesses: Vec<Lemma1Witness>,
    pub min_derivative: f64,
    pub pass: bool,
}

// Inverts the truncated series near the origin by Newton's method.
fn local_inverse(s: &LinearizerSeries, target: Complex64) -> Option<Complex64> {
    let mut w = target - s.center;
    for _ in 0..60 {
        let (v, dv) = s.series(w);
        if dv.norm() == 0.0 {
            return None;
        }
        let step = (v - target) / dv;
        w -= step;
        if step.norm() <= 1e-15 * w.norm().max(1e-300) {
            break;
        }
    }
    ((s.series(w).0 - target).norm() < 1e-12 * (1.0 + target.norm())).then_some(w)
}

/// Non-zero solutions of `Ψ(z) = p` from the backward tree of `p`, and the
/// smallest `|Ψ'|` among them.
pub fn lemma1_witness(s: &LinearizerSeries, f: &RationalMap, count: usize) -> Result<Lemma1Report, LinearizerError> {
    let p = s.base_point;
    if is_postcritical(f, p, POSTCRITICAL_DEPTH) {
        return Err(LinearizerError::BasePointPostcritical);
    }
    let local = s.safe_radius() / 2.0;
    let near = |q: &SpherePoint| -> Option<Complex64> {
        let v = s.chart.apply(*q).finite()?;
        ((v - s.center).norm() <= local * 0.5).then_some(v)
    };
    let mut witnesses: Vec<Lemma1Witness> = Vec::new();
    let mut frontier: Vec<SpherePoint> = vec![p];
    for depth in 1..=8 {
        let mut next = Vec::new();
        for w in &frontier {
            for child in f.preimages(*w).map_err(|_| DynamicsError::PreimageSolveFailed)? {
                if child.chordal_distance(&p) < 1e-9 {
                    continue;
                }
                next.push(child);
                // pull the node toward p along the branch fixing p
                let mut q = child;
                let mut steps = depth;
                while near(&q).is_none() && steps < 200 {
                    let pre = f.preimages(q).map_err(|_| DynamicsError::PreimageSolveFailed)?;
                    q = pre.into_iter().min_by(|a, b| a.chordal_distance(&p).total_cmp(&b.chordal_distance(&p))).unwrap();
                    steps += 1;
                }
                let Some(v) = near(&q) else { continue };
                let Some(zeta) = local_inverse(s, v) else { continue };
                let z = zeta * s.multiplier.powu(steps as u32);
                if witnesses.iter().any(|w| (w.z - z).norm() <= 1e-6 * z.norm().max(1.0)) {
                    continue;
                }
                let (value, d) = poincare_eval_with_derivative(s, f, z);
                witnesses.push(Lemma1Witness { z, residual: value.chordal_distance(&p), derivative_abs: d.norm() });
                if witnesses.len() >= count {
                    break;
                }
            }
            if witnesses.len() >= count {
                break;
            }
        }
        if witnesses.len() >= count || next.is_empty() {
            break;
        }
        next.truncate(4 * count.max(1));
        frontier = next;
    }
    let min_derivative = witnesses.iter().map(|w| w.derivative_abs).fold(f64::INFINITY, f64::min);
    let pass = !witnesses.is_empty() && min_derivative > 1e-6 && witnesses.iter().all(|w| w.residual < 1e-6);
    Ok(Lemma1Report { witnesses, min_derivative, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Report {
    pub n: usize,
    pub target: SpherePoint,
    pub radius: f64,
    /// Closest periodic point of period dividing `n`, if any.
    pub nearest: Option<SpherePoint>,
    pub distance: f64,
    pub multiplier: Option<Complex64>,
    pub pass: bool,
}

/// Looks for a repelling point of period `n` within `10|Q||λ|^{-n}` of
/// `Ψ(λ^{-n} Q)`, where `Ψ(Q) = p`.
pub fn lemma3_witness(s: &LinearizerSeries, f: &RationalMap, q: Complex64, n: usize) -> Result<Lemma3Report, LinearizerError> {
    let scale = s.multiplier.powu(n as u32);
    let target = poincare_eval(s, f, q / scale);
    let radius = 10.0 * q.norm() / scale.norm();
    let chart = Chart::of(target);
    let t = target.coord(chart);
    let mut solver = PeriodicSolver::new(f)?;
    let mut best: Option<(f64, SpherePoint, Complex64, Stability)> = None;
    for m in (1..=n).filter(|m| n.is_multiple_of(*m)) {
        for orbit in solver.orbits(m)? {
            let lam_n = orbit.multiplier.powu((n / m) as u32);
            for pt in &orbit.points {
                let dist = (pt.coord(chart) - t).norm();
                if dist.is_finite() && best.as_ref().is_none_or(|b| dist < b.0) {
                    best = Some((dist, *pt, lam_n, orbit.stability));
                }
            }
        }
    }
    Ok(match best {
        Some((distance, pt, lam, stability)) => Lemma3Report {
            n,
            target,
            radius,
            nearest: Some(pt),
            distance,
            multiplier: Some(lam),
            pass: distance <= radius && stability == Stability::Repelling,
        },
        None => Lemma3Report { n, target, radius, nearest: None, distance: f64::INFINITY, multiplier: None, pass: false },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_map;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn taylor_of_square_and_chebyshev() {
        let a = local_taylor(&parse_map("z^2").unwrap(), SpherePoint::real(1.0), 5).unwrap();
        assert_eq!(a[0], Complex64::new(1.0, 0.0));
        assert_eq!(a[1], Complex64::new(2.0, 0.0));
        assert_eq!(a[2], Complex64::new(1.0, 0.0));
        assert!(a[3..].iter().all(|c| c.norm() == 0.0));
        let b = local_taylor(&parse_map("2*z^2-1").unwrap(), SpherePoint::real(1.0), 3).unwrap();
        assert_eq!((b[1].re, b[2].re), (4.0, 2.0));
    }

    #[test]
    fn exponential_linearizer() {
        let f = parse_map("z^2").unwrap();
        let s = poincare_coeffs(&f, SpherePoint::real(1.0), DEFAULT_ORDER).unwrap();
        for n in 1..=20 {
            assert!((s.coeffs[n - 1].re - 1.0 / factorial(n)).abs() < 1e-10);
        }
        let v = poincare_eval(&s, &f, Complex64::new(2f64.ln(), 0.0)).finite().unwrap();
        assert!((v - 2.0).norm() < 1e-12);
        let v = poincare_eval(&s, &f, Complex64::new(0.0, std::f64::consts::PI)).finite().unwrap();
        assert!((v + 1.0).norm() < 1e-12);
        assert_eq!(poincare_eval(&s, &f, Complex64::new(0.0, 0.0)), SpherePoint::real(1.0));
    }

    #[test]
    fn infinity_base_point() {
        // f(z) ~ z/2 near infinity, so infinity is repelling with multiplier 2
        let f = parse_map("z^2/(2*z-1)").unwrap();
        let s = poincare_coeffs(&f, SpherePoint::Infinity, 32).unwrap();
        assert!((s.multiplier.norm() - 2.0).abs() < 1e-12);
        assert_eq!(poincare_eval(&s, &f, Complex64::new(0.0, 0.0)), SpherePoint::Infinity);
        let z = Complex64::new(0.05, 0.02);
        let lhs = poincare_eval(&s, &f, s.multiplier * z);
        let rhs = f.eval(poincare_eval(&s, &f, z));
        assert!(lhs.chordal_distance(&rhs) < 1e-10);
    }

    #[test]
    fn not_repelling_rejected() {
        let f = parse_map("z^2").unwrap();
        assert!(matches!(poincare_coeffs(&f, SpherePoint::real(0.0), 8), Err(LinearizerError::NotRepelling(_))));
        assert!(matches!(poincare_coeffs(&f, SpherePoint::real(0.5), 8), Err(LinearizerError::NotFixed(_))));
    }

    #[test]
    fn postcritical_guard() {
        let f = parse_map("z^2-2").unwrap();
        let s = poincare_coeffs(&f, SpherePoint::real(2.0), DEFAULT_ORDER).unwrap();
        assert_eq!(lemma1_witness(&s, &f, 4), Err(LinearizerError::BasePointPostcritical));
    }

    #[test]
    fn cosh_linearizer() {
        let f = parse_map("2*z^2-1").unwrap();
        let s = poincare_coeffs(&f, SpherePoint::real(1.0), DEFAULT_ORDER).unwrap();
        for n in 1..=15 {
            let expected = 2f64.powi(n as i32) / factorial(2 * n);
            assert!((s.coeffs[n - 1].re - expected).abs() < 1e-12 * expected.max(1e-300) + 1e-18);
        }
        let z = Complex64::new(3.0, -1.5);
        let v = poincare_eval(&s, &f, z).finite().unwrap();
        assert!((v - (z * 2.0).sqrt().cosh()).norm() < 1e-9 * v.norm());
    }

    #[test]
    fn valiron_orders() {
        let f = parse_map("z^2").unwrap();
        let s = poincare_coeffs(&f, SpherePoint::real(1.0), DEFAULT_ORDER).unwrap();
        let r = valiron_order(&s, &f).unwrap();
        assert!((r.rho_formula - 1.0).abs() < 1e-12);
        assert!((r.rho_measured - 1.0).abs() < 0.1, "{r:?}");
        assert!(!r.heuristic);
        let g = parse_map("2*z^2-1").unwrap();
        let s = poincare_coeffs(&g, SpherePoint::real(1.0), DEFAULT_ORDER).unwrap();
        let r = valiron_order(&s, &g).unwrap();
        assert!((r.rho_formula - 0.5).abs() < 1e-12);
        assert!((r.rho_measured - 0.5).abs() < 0.1, "{r:?}");
    }

    #[test]
    fn lemma_one_for_exponential() {
        let f = parse_map("z^2").unwrap();
        let s = poincare_coeffs(&f, SpherePoint::real(1.0), DEFAULT_ORDER).unwrap();
        let r = lemma1_witness(&s, &f, 6).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.witnesses.len(), 6);
        for w in &r.witnesses {
            // zeros of e^z - 1 are 2πik and |Ψ'| = |e^z| = 1 there
            let k = w.z.im / std::f64::consts::TAU;
            assert!(w.z.re.abs() < 1e-8 && (k - k.round()).abs() < 1e-8 && k.round() != 0.0);
            assert!((w.derivative_abs - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn lemma_one_for_chebyshev() {
        let f = parse_map("z^2-2").unwrap();
        let s = poincare_coeffs(&f, SpherePoint::real(-1.0), DEFAULT_ORDER).unwrap();
        let r = lemma1_witness(&s, &f, 5).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn lemma_three_for_square() {
        let f = parse_map("z^2").unwrap();
        let s = poincare_coeffs(&f, SpherePoint::real(1.0), DEFAULT_ORDER).unwrap();
        let q = Complex64::new(0.0, std::f64::consts::TAU);
        let r = lemma3_witness(&s, &f, q, 8).unwrap();
        assert!(r.pass, "{r:?}");
        let coarse = lemma3_witness(&s, &f, q, 1).unwrap();
        assert!(coarse.nearest.is_some());
    }
}
