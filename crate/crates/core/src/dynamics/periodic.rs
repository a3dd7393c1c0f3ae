use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::algebra::{Chart, Moebius, RationalMap, SpherePoint};
use crate::par;
use crate::roots::{self, Evaluation, RootOptions, RootTarget};

/// Width of the neutral band around `|λ| = 1`.
pub const NEUTRAL_BAND: f64 = 1e-6;
/// Chordal radius for identifying solutions across periods.
pub const PERIOD_CLUSTER_RADIUS: f64 = 1e-6;
/// Largest admissible `d^n + 1`.
pub const PERIODIC_DEGREE_CAP: usize = 4097;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Neutral,
    Repelling,
}

impl Stability {
    pub fn classify(multiplier: Complex64) -> Self {
        let r = multiplier.norm();
        if r < 1.0 - NEUTRAL_BAND {
            Stability::Attracting
        } else if r > 1.0 + NEUTRAL_BAND {
            Stability::Repelling
        } else {
            Stability::Neutral
        }
    }
}

/// One periodic cycle, starting at its lexicographically smallest point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub points: Vec<SpherePoint>,
    pub exact_period: usize,
    pub multiplier: Complex64,
    pub stability: Stability,
}

impl PeriodicOrbit {
    pub fn is_repelling(&self) -> bool {
        self.stability == Stability::Repelling
    }
}

/// Multiplier of a cycle as the product of chart derivatives around it.
pub fn cycle_multiplier(f: &RationalMap, cycle: &[SpherePoint]) -> Complex64 {
    let n = cycle.len();
    (0..n).fold(Complex64::new(1.0, 0.0), |acc, i| {
        let next = cycle[(i + 1) % n];
        acc * f.chart_derivative(cycle[i], Chart::of(next))
    })
}

/// `f^n(z) - z` evaluated by iterating the homogeneous form of `f`, with the
/// pair rescaled at every step so nothing overflows.
struct PeriodEquation<'a> {
    f: &'a RationalMap,
    n: usize,
    degree: usize,
}

impl RootTarget for PeriodEquation<'_> {
    fn degree(&self) -> usize {
        self.degree
    }

    fn evaluate(&self, z: Complex64) -> Evaluation {
        let d = self.f.degree();
        let df = d as f64;
        let one = Complex64::new(1.0, 0.0);
        let (mut x, mut y) = (z, one);
        let (mut dx, mut dy) = (one, Complex64::new(0.0, 0.0));
        for _ in 0..self.n {
            let s = x.norm().max(y.norm());
            x /= s;
            y /= s;
            dx /= s;
            dy /= s;
            let (ax, ay, bx, by, a, b);
            if x.norm() <= y.norm() {
                let t = x / y;
                let h = self.f.homogeneous_at(t, Chart::Origin);
                let yd1 = y.powu(d as u32 - 1);
                a = h.a * yd1 * y;
                b = h.b * yd1 * y;
                ax = h.da * yd1;
                bx = h.db * yd1;
                ay = (h.a * df - t * h.da) * yd1;
                by = (h.b * df - t * h.db) * yd1;
            } else {
                let t = y / x;
                let h = self.f.homogeneous_at(t, Chart::Infinity);
                let xd1 = x.powu(d as u32 - 1);
                a = h.a * xd1 * x;
                b = h.b * xd1 * x;
                ay = h.da * xd1;
                by = h.db * xd1;
                ax = (h.a * df - t * h.da) * xd1;
                bx = (h.b * df - t * h.db) * xd1;
            }
            let ndx = ax * dx + ay * dy;
            let ndy = bx * dx + by * dy;
            x = a;
            y = b;
            dx = ndx;
            dy = ndy;
        }
        let value = x - z * y;
        let derivative = dx - y - z * dy;
        let noise = 8.0 * (self.n * d) as f64 * f64::EPSILON * (x.norm() + z.norm() * y.norm());
        Evaluation { value, derivative, noise }
    }
}

// Rotations of the sphere tried in turn so that no solution sits at the
// chart's point at infinity.
const ROTATION_CENTERS: [(f64, f64); 4] = [(0.2903, 0.3127), (-0.4181, 0.1772), (0.1379, -0.5213), (0.6011, 0.2417)];

fn rotation(center: (f64, f64)) -> Moebius {
    let a = Complex64::new(center.0, center.1);
    Moebius::new(Complex64::new(1.0, 0.0), -a, a.conj(), Complex64::new(1.0, 0.0)).expect("unitary")
}

/// Solutions of `f^n(z) = z` for one period, in a rotated chart.
struct PeriodSolution {
    rotation: Moebius,
    rotated_map: RationalMap,
    /// Solutions in the rotated chart, sorted, with cluster sizes.
    points: Vec<Complex64>,
    multiplicities: Vec<usize>,
}

impl PeriodSolution {
    fn original(&self, z: Complex64) -> SpherePoint {
        let p = self.rotation.inverse().apply_complex(z);
        // points this close to infinity are infinity up to rounding
        if p.chordal_distance(&SpherePoint::Infinity) <= 1e-12 {
            SpherePoint::Infinity
        } else {
            p
        }
    }
}

/// Shared solver for several periods of one map; caches the solution set
/// of each period so divisors are solved once.
pub struct PeriodicSolver<'a> {
    f: &'a RationalMap,
    solutions: BTreeMap<usize, PeriodSolution>,
}

impl<'a> PeriodicSolver<'a> {
    pub fn new(f: &'a RationalMap) -> Result<Self, DynamicsError> {
        if f.degree() < 2 {
            return Err(DynamicsError::DegreeTooLow(f.degree()));
        }
        Ok(Self { f, solutions: BTreeMap::new() })
    }

    fn equation_degree(&self, n: usize) -> Result<usize, DynamicsError> {
        let d = self.f.degree();
        let mut dn: usize = 1;
        for _ in 0..n {
            dn = dn.checked_mul(d).ok_or(DynamicsError::DegreeCapExceeded { period: n })?;
            if dn + 1 > PERIODIC_DEGREE_CAP {
                return Err(DynamicsError::DegreeCapExceeded { period: n });
            }
        }
        Ok(dn + 1)
    }

    fn solve(&mut self, n: usize) -> Result<&PeriodSolution, DynamicsError> {
        if !self.solutions.contains_key(&n) {
            let degree = self.equation_degree(n)?;
            let mut last_err = DynamicsError::RootFindingFailed { period: n };
            let mut found = None;
            for center in ROTATION_CENTERS {
                let m = rotation(center);
                let g = self.f.conjugate(&m);
                match solve_rotated(&g, n, degree) {
                    Ok((points, multiplicities)) => {
                        found = Some(PeriodSolution { rotation: m, rotated_map: g, points, multiplicities });
                        break;
                    }
                    Err(e) => last_err = e,
                }
            }
            let sol = found.ok_or(last_err)?;
            self.solutions.insert(n, sol);
        }
        Ok(&self.solutions[&n])
    }

    /// All `d^n + 1` solutions of `f^n(z) = z` with multiplicity, in the
    /// original coordinates.
    pub fn solutions(&mut self, n: usize) -> Result<Vec<SpherePoint>, DynamicsError> {
        let sol = self.solve(n)?;
        Ok(sol.points.iter().map(|&z| sol.original(z)).collect())
    }

    /// Cycles of exact period `n`.
    pub fn orbits(&mut self, n: usize) -> Result<Vec<PeriodicOrbit>, DynamicsError> {
        let divisors: Vec<usize> = (1..n).filter(|m| n.is_multiple_of(*m)).collect();
        let mut lower: Vec<SpherePoint> = Vec::new();
        for m in divisors {
            lower.extend(self.solutions(m)?);
        }
        let sol = self.solve(n)?;
        let g = &sol.rotated_map;
        // one representative per cluster, and nothing of lower period
        let mut reps: Vec<Complex64> = Vec::new();
        for (i, &z) in sol.points.iter().enumerate() {
            if sol.multiplicities[i] > 1 && reps.contains(&z) {
                continue;
            }
            let orig = sol.original(z);
            if lower.iter().any(|q| q.chordal_distance(&orig) <= PERIOD_CLUSTER_RADIUS) {
                continue;
            }
            reps.push(z);
        }
        let mut assigned = vec![false; reps.len()];
        let mut orbits = Vec::new();
        for i in 0..reps.len() {
            if assigned[i] {
                continue;
            }
            assigned[i] = true;
            let mut cycle = vec![SpherePoint::Finite(reps[i])];
            let mut cur = SpherePoint::Finite(reps[i]);
            let mut closed_early = false;
            for _ in 1..n {
                let img = g.eval(cur);
                let nearest = reps
                    .iter()
                    .enumerate()
                    .map(|(j, &r)| (j, SpherePoint::Finite(r).chordal_distance(&img)))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                cur = match nearest {
                    Some((j, dist)) if dist <= PERIOD_CLUSTER_RADIUS => {
                        if j == i {
                            closed_early = true;
                            break;
                        }
                        assigned[j] = true;
                        SpherePoint::Finite(reps[j])
                    }
                    _ => img,
                };
                cycle.push(cur);
            }
            if closed_early {
                continue;
            }
            let multiplier = cycle_multiplier(g, &cycle);
            let mut points: Vec<SpherePoint> = cycle
                .iter()
                .map(|p| match p {
                    SpherePoint::Finite(z) => sol.original(*z),
                    SpherePoint::Infinity => sol.rotation.inverse().apply(SpherePoint::Infinity),
                })
                .collect();
            let start = points
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    let (ka, kb) = (a.1.lex_key(), b.1.lex_key());
                    ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
                })
                .map(|(k, _)| k)
                .unwrap_or(0);
            points.rotate_left(start);
            orbits.push(PeriodicOrbit { points, exact_period: n, multiplier, stability: Stability::classify(multiplier) });
        }
        orbits.sort_by(|a, b| {
            let (ka, kb) = (a.points[0].lex_key(), b.points[0].lex_key());
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        });
        Ok(orbits)
    }
}

fn solve_rotated(g: &RationalMap, n: usize, degree: usize) -> Result<(Vec<Complex64>, Vec<usize>), DynamicsError> {
    let eq = PeriodEquation { f: g, n, degree };
    // clustered solution sets converge slowly; allow iterations to scale
    let opts = RootOptions { max_iterations: (4 * degree).max(500), ..RootOptions::default() };
    let start = roots::circle_start(degree, 1.0, opts.seed ^ n as u64);
    let (found, converged, iterations) = roots::aberth(&eq, start, &opts);
    if !converged {
        return Err(DynamicsError::RootFindingFailed { period: n });
    }
    let polished = par::map_slice(&found, |&z| {
        let mut best = (z, eq.evaluate(z).value.norm());
        let mut cur = z;
        for _ in 0..2 {
            let e = eq.evaluate(cur);
            if e.derivative.norm() == 0.0 {
                break;
            }
            cur -= e.value / e.derivative;
            let r = eq.evaluate(cur).value.norm();
            if r < best.1 {
                best = (cur, r);
            }
        }
        best.0
    });
    // a solution near the chart's infinity means the rotation was unlucky
    if polished.iter().any(|z| !(z.norm() < 1e4)) {
        return Err(DynamicsError::RootFindingFailed { period: n });
    }
    // Merge only roots that are indistinguishable at their own accuracy:
    // a multiple root splits by about sqrt(noise), which this radius covers,
    // while distinct cycles of strongly expanding maps can sit far closer
    // than any fixed radius.
    let radii = par::map_slice(&polished, |&z| {
        let e = eq.evaluate(z);
        let d = e.derivative.norm();
        let err = if d > 0.0 { (e.noise + e.value.norm()) / d } else { f64::INFINITY };
        (16.0 * err).clamp(1e-13 * z.norm().max(1.0), PERIOD_CLUSTER_RADIUS)
    });
    let set = roots::finish_with_radii(&eq, polished, radii, true, iterations);
    let mut points = set.roots.clone();
    for i in 0..points.len() {
        if set.multiplicities[i] > 1 && (i == 0 || points[i - 1] != set.roots[i]) {
            let refined = refine_multiple(&eq, set.roots[i]);
            for (p, &r) in points.iter_mut().zip(&set.roots) {
                if r == set.roots[i] {
                    *p = refined;
                }
            }
        }
    }
    Ok((points, set.multiplicities))
}

/// A multiple solution is also a zero of the derivative, where Newton
/// converges quadratically again; the second derivative is a central
/// difference of the exact first one.
fn refine_multiple(eq: &PeriodEquation, z0: Complex64) -> Complex64 {
    let mut best = (z0, eq.evaluate(z0).derivative.norm());
    let mut z = z0;
    for _ in 0..8 {
        let h = 1e-5 * z.norm().max(1.0);
        let d = eq.evaluate(z).derivative;
        let d2 = (eq.evaluate(z + h).derivative - eq.evaluate(z - h).derivative) / (2.0 * h);
        if d2.norm() == 0.0 {
            break;
        }
        z -= d / d2;
        let r = eq.evaluate(z).derivative.norm();
        if !(r < best.1) {
            break;
        }
        best = (z, r);
    }
    // only accept a polish that stays inside the cluster
    if (best.0 - z0).norm() <= PERIOD_CLUSTER_RADIUS * z0.norm().max(1.0) {
        best.0
    } else {
        z0
    }
}

/// All cycles of exact period `n`.
pub fn periodic_points(f: &RationalMap, n: usize) -> Result<Vec<PeriodicOrbit>, DynamicsError> {
    PeriodicSolver::new(f)?.orbits(n)
}

/// Multiplier-table row (JSON external form).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierRow {
    pub period: usize,
    pub points: Vec<SpherePoint>,
    pub multiplier_re: f64,
    pub multiplier_im: f64,
    pub stability: Stability,
}

impl From<&PeriodicOrbit> for MultiplierRow {
    fn from(o: &PeriodicOrbit) -> Self {
        Self {
            period: o.exact_period,
            points: o.points.clone(),
            multiplier_re: o.multiplier.re,
            multiplier_im: o.multiplier.im,
            stability: o.stability,
        }
    }
}

/// The repelling orbit whose multiplier is furthest from real.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Offender {
    pub period: usize,
    pub points: Vec<SpherePoint>,
    pub multiplier_re: f64,
    pub multiplier_im: f64,
    /// `|Im λ|`.
    pub imag_abs: f64,
    /// `|Im λ| / max(1, |λ|)`.
    pub relative_imag: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealMultiplierReport {
    pub pass: bool,
    pub n_max: usize,
    pub tol: f64,
    /// Last period examined; the scan stops at the first failing period.
    pub checked_up_to: usize,
    pub repelling_checked: usize,
    pub worst: Option<Offender>,
    pub table: Vec<MultiplierRow>,
}

/// Checks that every repelling cycle of period up to `n_max` has a real
/// multiplier: `|Im λ| <= tol * max(1, |λ|)`.
pub fn real_multiplier_test(f: &RationalMap, n_max: usize, tol: f64) -> Result<RealMultiplierReport, DynamicsError> {
    let mut solver = PeriodicSolver::new(f)?;
    let mut table = Vec::new();
    let mut worst: Option<Offender> = None;
    let mut pass = true;
    let mut checked_up_to = 0;
    let mut repelling_checked = 0;
    for n in 1..=n_max {
        let orbits = solver.orbits(n)?;
        checked_up_to = n;
        for o in &orbits {
            table.push(MultiplierRow::from(o));
            if !o.is_repelling() {
                continue;
            }
            repelling_checked += 1;
            let lam = o.multiplier;
            let relative = lam.im.abs() / lam.norm().max(1.0);
            if relative > tol {
                pass = false;
            }
            if worst.as_ref().is_none_or(|w| relative > w.relative_imag) {
                worst = Some(Offender {
                    period: n,
                    points: o.points.clone(),
                    multiplier_re: lam.re,
                    multiplier_im: lam.im,
                    imag_abs: lam.im.abs(),
                    relative_imag: relative,
                });
            }
        }
        if !pass {
            break;
        }
    }
    Ok(RealMultiplierReport { pass, n_max, tol, checked_up_to, repelling_checked, worst, table })
}
