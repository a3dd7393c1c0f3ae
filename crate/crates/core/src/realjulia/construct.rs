//! Real polynomials with prescribed critical values.
//!
//! Critical values are listed left to right (by the position of their
//! critical points). For the Julia set to be real the extrema alternate,
//! every maximum is at least 1 and every minimum at most 0.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::RealJuliaError;
use crate::algebra::Poly;
use crate::roots;

/// Newton iterations allowed per solve attempt.
pub const NEWTON_CAP: usize = 200;
const RESTARTS: usize = 4;
const VALUE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueSpec {
    pub critical_values: Vec<f64>,
}

impl CriticalValueSpec {
    pub fn new(values: Vec<f64>) -> Self {
        Self { critical_values: values }
    }

    pub fn degree(&self) -> usize {
        self.critical_values.len() + 1
    }
}

/// `(-1)^j c_j` has constant sign (zeros allowed) and no `c_j` lies in
/// the open interval `(0, 1)`.
pub fn check_sign_condition(values: &[f64]) -> bool {
    if values.iter().any(|&c| !c.is_finite() || (c > 0.0 && c < 1.0)) {
        return false;
    }
    let signed = values.iter().enumerate().map(|(j, &c)| if j % 2 == 0 { -c } else { c });
    let (mut pos, mut neg) = (false, false);
    for v in signed {
        pos |= v > 0.0;
        neg |= v < 0.0;
    }
    !(pos && neg)
}

/// Output of [`construct_polynomial`] together with its own verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructedPolynomial {
    /// Real coefficients, ascending powers.
    pub coeffs: Vec<f64>,
    pub target: Vec<f64>,
    pub critical_points: Vec<f64>,
    pub critical_values: Vec<f64>,
    /// Largest deviation of the achieved critical values from the target.
    pub value_error: f64,
    /// Convex hull of `f^{-1}({0, 1})`.
    pub hull: (f64, f64),
    pub hull_error: f64,
    /// Deviation from the endpoint relations (fixed pair or 2-cycle for odd
    /// degree, common image in `{0, 1}` for even degree).
    pub endpoint_residual: f64,
    /// Whether the rightmost critical point is a minimum (so the leading
    /// coefficient is positive).
    pub leading_positive: bool,
    pub newton_iterations: usize,
}

impl ConstructedPolynomial {
    pub fn poly(&self) -> Poly {
        Poly::from_real(&self.coeffs)
    }
}

/// Whether each critical point is a maximum; `None` if the values cannot
/// be realized with alternating extrema, maxima `>= 1` and minima `<= 0`.
fn roles(values: &[f64]) -> Option<Vec<bool>> {
    [true, false].into_iter().find_map(|first_max| {
        let r: Vec<bool> = (0..values.len()).map(|j| (j % 2 == 0) == first_max).collect();
        let ok = values.iter().zip(&r).all(|(&c, &is_max)| if is_max { c >= 1.0 } else { c <= 0.0 });
        ok.then_some(r)
    })
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn real_from_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &r in roots {
        let mut next = vec![0.0; c.len() + 1];
        for (k, &a) in c.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= r * a;
        }
        c = next;
    }
    c
}

fn integral_from_zero(c: &[f64], scale: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(c.iter().enumerate().map(|(k, &a)| scale * a / (k + 1) as f64));
    out
}

/// `P(z) = d * integral_0^z prod (w - xi_k) dw`.
fn primitive(xi: &[f64]) -> Vec<f64> {
    integral_from_zero(&real_from_roots(xi), (xi.len() + 1) as f64)
}

/// Unknowns: interior critical points, `s`, `t` (outer points pinned to 0
/// and 1). Returns residuals `s P(xi_j) + t - c_j` and their Jacobian.
fn system(xi: &[f64], s: f64, t: f64, target: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let n = xi.len();
    let p = primitive(xi);
    let inner = n.saturating_sub(2);
    let mut r = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, inner + 2);
    for j in 0..n {
        let pj = horner(&p, xi[j]);
        r[j] = s * pj + t - target[j];
        for k in 0..inner {
            let others: Vec<f64> = xi.iter().enumerate().filter(|&(m, _)| m != k + 1).map(|(_, &x)| x).collect();
            let dk = integral_from_zero(&real_from_roots(&others), -((n + 1) as f64));
            jac[(j, k)] = s * horner(&dk, xi[j]);
        }
        jac[(j, inner)] = pj;
        jac[(j, inner + 1)] = 1.0;
    }
    (r, jac)
}

struct State {
    xi: Vec<f64>,
    s: f64,
    t: f64,
}

impl State {
    fn unpack(&self) -> Vec<f64> {
        let n = self.xi.len();
        let mut u: Vec<f64> = self.xi[1..n - 1].to_vec();
        u.push(self.s);
        u.push(self.t);
        u
    }

    fn pack(&self, u: &[f64]) -> State {
        let n = self.xi.len();
        let mut xi = self.xi.clone();
        xi[1..n - 1].copy_from_slice(&u[..n - 2]);
        State { xi, s: u[n - 2], t: u[n - 1] }
    }

    fn admissible(&self, sign: f64) -> bool {
        self.s * sign > 0.0 && self.xi.windows(2).all(|w| w[0] < w[1]) && self.s.is_finite() && self.t.is_finite()
    }
}

/// Damped Newton toward `target`; returns false if it stalls.
fn newton(state: &mut State, target: &[f64], sign: f64, budget: &mut usize, trace: &mut Vec<f64>) -> bool {
    let scale = target.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    loop {
        let (r, jac) = system(&state.xi, state.s, state.t, target);
        let norm = r.amax();
        trace.push(norm);
        if norm <= VALUE_TOLERANCE * scale {
            return true;
        }
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let Some(step) = jac.clone().lu().solve(&(-&r)) else {
            return false;
        };
        let u = state.unpack();
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda > 1e-6 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + lambda * b).collect();
            let cand = state.pack(&trial);
            if cand.admissible(sign) {
                let (rc, _) = system(&cand.xi, cand.s, cand.t, target);
                if rc.amax() < norm {
                    accepted = Some(cand);
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some(c) => *state = c,
            None => return false,
        }
    }
}

/// Continuation from the values of a seed polynomial to the target; both
/// endpoints have the same extremum pattern, so every intermediate target
/// is realizable.
fn solve(target: &[f64], sign: f64, perturb: f64, trace: &mut Vec<f64>) -> Option<(State, usize)> {
    let n = target.len();
    let d = n + 1;
    let nodes: Vec<f64> = (1..d).map(|k| (1.0 - (k as f64 * std::f64::consts::PI / d as f64).cos()) / 2.0).collect();
    let (lo, hi) = (nodes[0], nodes[n - 1]);
    let mut xi: Vec<f64> = nodes.iter().map(|x| (x - lo) / (hi - lo)).collect();
    for (k, x) in xi.iter_mut().enumerate().take(n.saturating_sub(1)).skip(1) {
        *x += perturb * (0.5 - ((k * 7919) % 13) as f64 / 13.0) / d as f64;
    }
    let mut state = State { xi, s: sign, t: 0.0 };
    let p = primitive(&state.xi);
    // fit |s| and t to the target's spread so the path is short
    let seed_values: Vec<f64> = state.xi.iter().map(|&x| horner(&p, x)).collect();
    let spread = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    if n > 1 && spread(&seed_values) > 0.0 {
        state.s = sign * spread(target) / spread(&seed_values);
    }
    let start: Vec<f64> = seed_values.iter().map(|v| state.s * v).collect();
    state.t = target[n - 1] - start[n - 1];
    let start: Vec<f64> = start.iter().map(|v| v + state.t).collect();

    let mut budget = NEWTON_CAP;
    let mut tau: f64 = 0.0;
    let mut h: f64 = 0.25;
    while tau < 1.0 {
        let next = (tau + h).min(1.0);
        let goal: Vec<f64> = start.iter().zip(target).map(|(a, b)| (1.0 - next) * a + next * b).collect();
        let mut trial = State { xi: state.xi.clone(), s: state.s, t: state.t };
        if newton(&mut trial, &goal, sign, &mut budget, trace) {
            state = trial;
            tau = next;
            h = (h * 2.0).min(0.5);
        } else {
            h /= 2.0;
            if h < 1e-4 || budget == 0 {
                return None;
            }
        }
    }
    Some((state, NEWTON_CAP - budget))
}

fn real_roots(p: &Poly) -> Result<Vec<f64>, RealJuliaError> {
    let rs = roots::all_roots(p, roots::DEFAULT_TOLERANCE).map_err(|_| RealJuliaError::RootFindingFailed)?;
    let scale = rs.roots.iter().fold(1.0f64, |m, r| m.max(r.norm()));
    Ok(rs.roots.iter().filter(|r| r.im.abs() <= 1e-7 * scale).map(|r| r.re).collect())
}

/// Real polynomial of degree `d = values.len() + 1` with critical values
/// `values` (left to right), normalized by `z -> az + b`, `a > 0`, so that
/// the convex hull of `{z : f(z) in {0, 1}}` is `[0, 1]`.
pub fn construct_polynomial(spec: &CriticalValueSpec) -> Result<ConstructedPolynomial, RealJuliaError> {
    let target = &spec.critical_values;
    if target.is_empty() {
        return Err(RealJuliaError::SpecViolation("at least one critical value is needed".into()));
    }
    if !check_sign_condition(target) {
        return Err(RealJuliaError::SpecViolation(
            "values must avoid (0, 1) and (-1)^j c_j must have constant sign".into(),
        ));
    }
    if target.windows(2).any(|w| w[0] == w[1]) {
        return Err(RealJuliaError::SpecViolation(
            "equal adjacent values make a degenerate (inflection) critical point; f = 1 then has fewer than d real solutions".into(),
        ));
    }
    let Some(is_max) = roles(target) else {
        return Err(RealJuliaError::SpecViolation(
            "extrema must alternate with maxima >= 1 and minima <= 0".into(),
        ));
    };
    let d = target.len() + 1;
    // f is increasing to the right of the last critical point iff it is a minimum
    let sign = if is_max[d - 2] { -1.0 } else { 1.0 };

    let (xi, s, t, iterations) = if d == 2 {
        (vec![0.0], sign, target[0], 0)
    } else {
        let mut trace = Vec::new();
        let mut found = None;
        for attempt in 0..RESTARTS {
            if let Some(hit) = solve(target, sign, 0.3 * attempt as f64, &mut trace) {
                found = Some(hit);
                break;
            }
        }
        let Some((state, its)) = found else {
            return Err(RealJuliaError::NewtonDiverged { trace });
        };
        (state.xi, state.s, state.t, its)
    };

    let mut raw: Vec<f64> = primitive(&xi).iter().map(|c| s * c).collect();
    raw[0] += t;
    let raw_poly = Poly::from_real(&raw);
    let mut level: Vec<f64> = real_roots(&raw_poly)?;
    let mut shifted = raw.clone();
    shifted[0] -= 1.0;
    level.extend(real_roots(&Poly::from_real(&shifted))?);
    let lo = level.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = level.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(RealJuliaError::SpecViolation("degenerate level set".into()));
    }
    let inner = Poly::from_real(&[lo, hi - lo]);
    let poly = raw_poly.compose(&inner);
    let coeffs: Vec<f64> = poly.coeffs().iter().map(|c| c.re).collect();

    // verification on the final coefficients
    let crit_poly = Poly::from_real(&coeffs).derivative();
    let mut critical_points = real_roots(&crit_poly)?;
    critical_points.sort_by(f64::total_cmp);
    let critical_values: Vec<f64> = critical_points.iter().map(|&x| horner(&coeffs, x)).collect();
    let value_error = if critical_values.len() == target.len() {
        critical_values.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let mut level = real_roots(&Poly::from_real(&coeffs))?;
    let mut minus_one = coeffs.clone();
    minus_one[0] -= 1.0;
    level.extend(real_roots(&Poly::from_real(&minus_one))?);
    let hull = (
        level.iter().cloned().fold(f64::INFINITY, f64::min),
        level.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let hull_error = hull.0.abs().max((hull.1 - 1.0).abs());
    let (f0, f1) = (horner(&coeffs, 0.0), horner(&coeffs, 1.0));
    let endpoint_residual = if d % 2 == 1 {
        let fixed = f0.abs().max((f1 - 1.0).abs());
        let swap = (f0 - 1.0).abs().max(f1.abs());
        fixed.min(swap)
    } else {
        (f0 - f1).abs().max(f0.abs().min((f0 - 1.0).abs()))
    };

    Ok(ConstructedPolynomial {
        coeffs,
        target: target.clone(),
        critical_points,
        critical_values,
        value_error,
        hull,
        hull_error,
        endpoint_residual,
        leading_positive: sign > 0.0,
        newton_iterations: iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(values: &[f64]) -> ConstructedPolynomial {
        construct_polynomial(&CriticalValueSpec::new(values.to_vec())).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn sign_condition_examples() {
        assert!(check_sign_condition(&[0.0, 1.0]));
        assert!(check_sign_condition(&[-0.5, 1.5]));
        assert!(!check_sign_condition(&[-0.5, -1.5]));
        assert!(!check_sign_condition(&[0.5]));
    }

    #[test]
    fn quadratic_with_minimum_zero() {
        // (2z - 1)^2
        let p = build(&[0.0]);
        assert!(close(&p.coeffs, &[1.0, -4.0, 4.0], 1e-12), "{:?}", p.coeffs);
    }

    #[test]
    fn quadratic_with_maximum_one() {
        // 4z(1 - z)
        let p = build(&[1.0]);
        assert!(close(&p.coeffs, &[0.0, 4.0, -4.0], 1e-12), "{:?}", p.coeffs);
    }

    #[test]
    fn quadratic_cantor_case() {
        // 6(z - 1/2)^2 - 1/2: critical value -1/2 and f(0) = f(1) = 1
        let p = build(&[-0.5]);
        assert!(close(&p.coeffs, &[1.0, -6.0, 6.0], 1e-12), "{:?}", p.coeffs);
    }

    #[test]
    fn chebyshev_cubic() {
        // the cubic Chebyshev polynomial moved to [0, 1]
        let p = build(&[1.0, 0.0]);
        assert!(p.value_error < 1e-10 && p.hull_error < 1e-10 && p.endpoint_residual < 1e-10, "{p:?}");
        let t3 = |x: f64| 4.0 * x.powi(3) - 3.0 * x;
        let q = |z: f64| (t3(2.0 * z - 1.0) + 1.0) / 2.0;
        for k in 0..=10 {
            let z = k as f64 / 10.0;
            assert!((horner(&p.coeffs, z) - q(z)).abs() < 1e-10);
        }
    }

    #[test]
    fn quartic_round_trip() {
        let p = build(&[-0.7, 2.5, -0.2]);
        assert!(p.value_error < 1e-8, "{p:?}");
        assert!(p.hull_error < 1e-8);
        assert!(p.endpoint_residual < 1e-9);
        assert!(p.leading_positive);
    }

    #[test]
    fn mirror_orientation() {
        // max then min is the mirror image of min then max
        let a = build(&[1.5, -0.5]);
        let b = build(&[-0.5, 1.5]);
        assert!(a.leading_positive && !b.leading_positive);
        for k in 0..=8 {
            let z = k as f64 / 8.0;
            assert!((horner(&a.coeffs, z) - horner(&b.coeffs, 1.0 - z)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_unrealizable_specs() {
        for bad in [vec![0.5], vec![-0.5, -1.5], vec![-0.5, 0.0, -0.5], vec![0.0, 0.0]] {
            assert!(matches!(
                construct_polynomial(&CriticalValueSpec::new(bad)),
                Err(RealJuliaError::SpecViolation(_))
            ));
        }
    }
}
