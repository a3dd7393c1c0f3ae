//! The three example families: a quadratic perturbation with an attractor
//! at infinity, a cubic with a parabolic point at infinity, and a cubic
//! perturbation of a Blaschke product whose critical points need two steps
//! to leave the interval.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::RealJuliaError;
use crate::algebra::{Poly, RationalMap, SpherePoint};
use crate::classifier::{theorem2_classify, Verdict};
use crate::dynamics::{cycle_multiplier, julia_cloud};
use crate::geometry::{containment_residual, GeneralizedCircle, ON_CIRCLE_TOLERANCE};
use crate::par;

const CLOUD_SEED: u64 = 20_240_517;
const CLOUD_SIZE: usize = 2000;
/// Real points whose preimages are tested in the complete-invariance check.
const PREIMAGE_SAMPLES: usize = 4096;

/// Family and parameters; the JSON form is `{"family":"EX1","c":0.25}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ExampleSpec {
    #[serde(rename = "EX1")]
    Ex1 { c: f64 },
    #[serde(rename = "EX2")]
    Ex2 { c: f64 },
    #[serde(rename = "EX3")]
    Ex3 { p: f64, a: f64, eps: f64 },
}

impl ExampleSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ExampleSpec::Ex1 { .. } => "EX1",
            ExampleSpec::Ex2 { .. } => "EX2",
            ExampleSpec::Ex3 { .. } => "EX3",
        }
    }
}

/// Intermediate quantities of the third family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ex3Construction {
    /// `K` with `g(1) = 1`.
    pub k: f64,
    pub g_prime_at_one: f64,
    /// Right end of `{g <= -1}` inside `(p, a)`.
    pub x_star: f64,
    /// Closed interval in `(p, a)` on which `g <= -1`.
    pub interval: (f64, f64),
    /// Midpoint of `interval`.
    pub c: f64,
    /// Preimage of `c` in `[a, 1]`.
    pub b: f64,
    /// `K(eps)` with `f(1) = 1`.
    pub k_eps: f64,
    /// Neighbourhood radius `10 sqrt(eps)` used to localize critical data.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleInstance {
    pub spec: ExampleSpec,
    pub degree: usize,
    pub expression: String,
    pub claims: Vec<String>,
    pub ex3: Option<Ex3Construction>,
    #[serde(skip)]
    pub map: RationalMap,
}

fn rational(num: &[f64], den: &[f64]) -> Result<RationalMap, RealJuliaError> {
    RationalMap::new(Poly::from_real(num), Poly::from_real(den))
        .map_err(|e| RealJuliaError::ParamOutOfRange(format!("degenerate map: {e}")))
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// The root of `q2 x^2 + q1 x + q0` inside `[lo, hi]`, if any.
fn quadratic_root_in(q2: f64, q1: f64, q0: f64, lo: f64, hi: f64) -> Option<f64> {
    let disc = q1 * q1 - 4.0 * q2 * q0;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // cancellation-free pair
    let q = -0.5 * (q1 + q1.signum() * s);
    let roots = [q / q2, if q != 0.0 { q0 / q } else { f64::NAN }];
    roots.into_iter().find(|r| r.is_finite() && *r >= lo && *r <= hi)
}

fn ex3_construction(p: f64, a: f64, eps: f64) -> Result<Ex3Construction, RealJuliaError> {
    let k = (1.0 - p) / (1.0 - a);
    // g'(1) for g = K z (z - a) / (z - p)
    let g_prime_at_one = k * ((2.0 - a) * (1.0 - p) - (1.0 - a)) / ((1.0 - p) * (1.0 - p));
    if !(k > 1.0) {
        return Err(RealJuliaError::Ex3ConstructionFailed(format!("K = {k} is not > 1")));
    }
    if !(g_prime_at_one > 1.0) {
        return Err(RealJuliaError::Ex3ConstructionFailed(format!("g'(1) = {g_prime_at_one} is not > 1")));
    }
    // g(x) = -1  <=>  K x^2 + (1 - K a) x - p = 0
    let x_star = quadratic_root_in(k, 1.0 - k * a, -p, p, a)
        .ok_or_else(|| RealJuliaError::Ex3ConstructionFailed("no point of (p, a) with g = -1".into()))?;
    let interval = ((p + x_star) / 2.0, x_star);
    let c = (interval.0 + interval.1) / 2.0;
    // g(b) = c  <=>  K b^2 - (K a + c) b + c p = 0
    let b = quadratic_root_in(k, -(k * a + c), c * p, a, 1.0)
        .ok_or_else(|| RealJuliaError::Ex3ConstructionFailed("no preimage of c in [a, 1]".into()))?;
    if !(eps < (b - a).min(1.0 - b) / 2.0) {
        return Err(RealJuliaError::Ex3ConstructionFailed(format!(
            "eps = {eps} is not small against the distance of b = {b} to a and 1"
        )));
    }
    let k_eps = (1.0 - b - eps) / (1.0 - b + eps);
    Ok(Ex3Construction { k, g_prime_at_one, x_star, interval, c, b, k_eps, delta: 10.0 * eps.sqrt() })
}

pub fn build_example(spec: ExampleSpec) -> Result<ExampleInstance, RealJuliaError> {
    let finite = |v: f64, name: &str| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(RealJuliaError::ParamOutOfRange(format!("{name} must be finite")))
        }
    };
    let (map, claims, ex3) = match spec {
        ExampleSpec::Ex1 { c } => {
            finite(c, "c")?;
            if c.abs() >= 1.0 {
                return Err(RealJuliaError::ParamOutOfRange(format!("EX1 needs |c| < 1, got {c}")));
            }
            let claims = vec![
                "infinity is attracting with multiplier c".into(),
                "the real line is completely invariant iff |c| >= 1/2".into(),
                "for |c| < 1/2 there is a full horseshoe on I = [p, q]".into(),
                "the Julia set is real".into(),
            ];
            (rational(&[-4.0, 0.0, 1.0], &[1.0, c])?, claims, None)
        }
        ExampleSpec::Ex2 { c } => {
            finite(c, "c")?;
            if !(c > 0.0 && c < 1.0) {
                return Err(RealJuliaError::ParamOutOfRange(format!("EX2 needs 0 < c < 1, got {c}")));
            }
            let claims = vec![
                "infinity is a parabolic fixed point".into(),
                "three monotone branches onto (-1, infinity)".into(),
                "the Julia set is real".into(),
            ];
            let num = mul(&[-2.0, 1.0], &[-c * c, 0.0, 1.0]);
            (rational(&num, &[-1.0, 0.0, 1.0])?, claims, None)
        }
        ExampleSpec::Ex3 { p, a, eps } => {
            for (v, n) in [(p, "p"), (a, "a"), (eps, "eps")] {
                finite(v, n)?;
            }
            if !(0.0 < p && p < a && a < 1.0) {
                return Err(RealJuliaError::ParamOutOfRange(format!("EX3 needs 0 < p < a < 1, got p = {p}, a = {a}")));
            }
            if !(eps > 0.0) {
                return Err(RealJuliaError::ParamOutOfRange(format!("EX3 needs eps > 0, got {eps}")));
            }
            let e = ex3_construction(p, a, eps)?;
            let num = mul(&mul(&[0.0, e.k_eps * e.k], &[-a, 1.0]), &[-e.b + eps, 1.0]);
            let den = mul(&[-p, 1.0], &[-e.b - eps, 1.0]);
            let claims = vec![
                "two real critical points near b with values straddling c".into(),
                "the critical values leave [0, 1] at the next step".into(),
                "critical escape time in I is exactly 2".into(),
                "the Julia set is real".into(),
            ];
            (rational(&num, &den)?, claims, Some(e))
        }
    };
    Ok(ExampleInstance {
        spec,
        degree: map.degree(),
        expression: map.to_string(),
        claims,
        ex3,
        map,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub status: ClaimStatus,
    pub detail: String,
}

impl Claim {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        let status = if pass { ClaimStatus::Pass } else { ClaimStatus::Fail };
        Self { name: name.into(), status, detail }
    }

    fn skipped(name: &str, detail: &str) -> Self {
        Self { name: name.into(), status: ClaimStatus::NotApplicable, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimsReport {
    pub spec: ExampleSpec,
    pub expression: String,
    pub ex3: Option<Ex3Construction>,
    pub claims: Vec<Claim>,
    /// Every applicable claim passed.
    pub pass: bool,
}

fn real_critical_points(f: &RationalMap) -> Result<Vec<f64>, RealJuliaError> {
    let crit = f.critical_points().map_err(|_| RealJuliaError::RootFindingFailed)?;
    let mut xs: Vec<f64> = crit.iter().filter_map(|p| p.as_real(1e-9)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    Ok(xs)
}

fn real_value(f: &RationalMap, x: f64) -> f64 {
    match f.eval_complex(Complex64::new(x, 0.0)) {
        SpherePoint::Finite(z) => z.re,
        SpherePoint::Infinity => f64::INFINITY,
    }
}

fn julia_real_claim(f: &RationalMap) -> Result<Claim, RealJuliaError> {
    let cloud = julia_cloud(f, CLOUD_SIZE, CLOUD_SEED)?;
    let res = containment_residual(&GeneralizedCircle::real_line(), &cloud);
    Ok(Claim::new("julia_real", res < ON_CIRCLE_TOLERANCE, format!("{} cloud points, real-line residual {res:.3e}", cloud.len())))
}

/// Whether every preimage of a dense set of real points is real, for the
/// first family at parameter `c`; returns the verdict and the largest
/// distance of a preimage from the real line.
pub fn ex1_completely_invariant(c: f64) -> Result<(bool, f64), RealJuliaError> {
    let f = build_example(ExampleSpec::Ex1 { c })?.map;
    let line = GeneralizedCircle::real_line();
    let samples: Vec<SpherePoint> = (0..PREIMAGE_SAMPLES)
        .map(|k| line.point_at((k as f64 + 0.5) / PREIMAGE_SAMPLES as f64))
        .chain(std::iter::once(SpherePoint::Infinity))
        .collect();
    let residuals = par::map_slice(&samples, |w| f.preimages(*w).map(|pre| containment_residual(&line, &pre)));
    let mut worst: f64 = 0.0;
    for r in residuals {
        worst = worst.max(r.map_err(|_| RealJuliaError::RootFindingFailed)?);
    }
    Ok((worst <= ON_CIRCLE_TOLERANCE, worst))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    /// `(c, completely invariant)` on a uniform grid of `(0, 1)`.
    pub grid: Vec<(f64, bool)>,
    pub flips: usize,
    /// Final bisection bracket: not invariant at `lo`, invariant at `hi`.
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    /// Where `16 - 64 c^2` changes sign.
    pub discriminant_threshold: f64,
    pub agrees: bool,
}

/// Locates the parameter where the real line becomes completely invariant
/// for the first family, by a grid scan followed by bisection to `tol`.
pub fn ex1_blaschke_threshold(tol: f64) -> Result<ThresholdReport, RealJuliaError> {
    let steps = 40;
    let mut grid = Vec::with_capacity(steps - 1);
    for k in 1..steps {
        let c = k as f64 / steps as f64;
        grid.push((c, ex1_completely_invariant(c)?.0));
    }
    let flips = grid.windows(2).filter(|w| w[0].1 != w[1].1).count();
    let first_true = grid.iter().position(|g| g.1);
    let (mut lo, mut hi) = match first_true {
        Some(i) if i > 0 => (grid[i - 1].0, grid[i].0),
        _ => (f64::NAN, f64::NAN),
    };
    if lo.is_finite() {
        while hi - lo > tol {
            let mid = (lo + hi) / 2.0;
            if ex1_completely_invariant(mid)?.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let estimate = (lo + hi) / 2.0;
    let discriminant_threshold = 0.5;
    let agrees = flips == 1 && (estimate - discriminant_threshold).abs() <= 1e-2;
    Ok(ThresholdReport { grid, flips, lo, hi, estimate, discriminant_threshold, agrees })
}

fn ex1_claims(c: f64, f: &RationalMap) -> Result<Vec<Claim>, RealJuliaError> {
    let mut claims = Vec::new();
    let lambda = cycle_multiplier(f, &[SpherePoint::Infinity]);
    claims.push(Claim::new(
        "attractor_at_infinity",
        (lambda - Complex64::new(c, 0.0)).norm() < 1e-12,
        format!("multiplier at infinity {:.15} {:+.3e}i", lambda.re, lambda.im),
    ));

    let predicted = 16.0 - 64.0 * c * c <= 0.0;
    let (sampled, worst) = ex1_completely_invariant(c)?;
    claims.push(Claim::new(
        "blaschke_threshold",
        predicted == sampled,
        format!(
            "discriminant 16 - 64c^2 = {:.6} predicts completely invariant = {predicted}; preimage sampling gives {sampled} (worst distance {worst:.3e})",
            16.0 - 64.0 * c * c
        ),
    ));

    if c.abs() < 0.5 {
        claims.push(ex1_horseshoe(c, f));
    } else {
        claims.push(Claim::skipped("full_horseshoe", "only claimed for |c| < 1/2"));
    }
    claims.push(julia_real_claim(f)?);
    Ok(claims)
}

/// `I = [p, q]` with `f(p) = f(q) = q` and a minimum below `p` inside.
fn ex1_horseshoe(c: f64, f: &RationalMap) -> Claim {
    // q fixed: (1 - c) q^2 - q - 4 = 0; p the other root of f(z) = q
    let q = (1.0 + (1.0 + 16.0 * (1.0 - c)).sqrt()) / (2.0 * (1.0 - c));
    let p = c * q - q;
    let pole_outside = c == 0.0 || !(p..=q).contains(&(-1.0 / c));
    let crit: Vec<f64> = real_critical_points(f).unwrap_or_default().into_iter().filter(|x| *x > p && *x < q).collect();
    let (fp, fq) = (real_value(f, p), real_value(f, q));
    let ok_ends = (fp - q).abs() <= 1e-9 * q.abs().max(1.0) && (fq - q).abs() <= 1e-9 * q.abs().max(1.0);
    let (pass, detail) = match crit.as_slice() {
        [m] => {
            let fm = real_value(f, *m);
            let pass = ok_ends && pole_outside && p < 0.0 && q > 0.0 && fm < p;
            (pass, format!("I = [{p:.12}, {q:.12}], f(p) = {fp:.12}, f(q) = {fq:.12}, minimum at {m:.12} with value {fm:.12}"))
        }
        _ => (false, format!("expected one critical point in I = [{p}, {q}], found {}", crit.len())),
    };
    Claim::new("full_horseshoe", pass, detail)
}

fn ex2_claims(f: &RationalMap) -> Result<Vec<Claim>, RealJuliaError> {
    let mut claims = Vec::new();
    let lambda = cycle_multiplier(f, &[SpherePoint::Infinity]);
    claims.push(Claim::new(
        "parabolic_infinity",
        (lambda - Complex64::new(1.0, 0.0)).norm() < 1e-12,
        format!("multiplier at infinity {:.15} {:+.3e}i", lambda.re, lambda.im),
    ));

    let crit = real_critical_points(f)?;
    let inner: Vec<f64> = crit.iter().copied().filter(|x| *x > -1.0 && *x < 1.0).collect();
    let right: Vec<f64> = crit.iter().copied().filter(|x| *x > 1.0).collect();
    let h = 1e-6;
    let limits = [real_value(f, -1.0 + h), real_value(f, 1.0 - h), real_value(f, 1.0 + h), real_value(f, 1e6)];
    let signs = limits[0] > 1e3 && limits[1] > 1e3 && limits[2] < -1e3 && limits[3] > 1e3;
    let (pass, detail) = match inner.as_slice() {
        [m] => {
            let fm = real_value(f, *m);
            (
                signs && fm < -1.0 && right.is_empty(),
                format!(
                    "unique minimum in (-1, 1) at {m:.12} with value {fm:.12}; {} critical points in (1, inf); one-sided limits at the poles {:?}",
                    right.len(),
                    limits
                ),
            )
        }
        _ => (false, format!("expected one critical point in (-1, 1), found {}", inner.len())),
    };
    claims.push(Claim::new("three_branches", pass, detail));
    claims.push(julia_real_claim(f)?);
    Ok(claims)
}

fn ex3_claims(e: &Ex3Construction, p: f64, a: f64, f: &RationalMap) -> Result<Vec<Claim>, RealJuliaError> {
    let mut claims = Vec::new();
    let near: Vec<f64> = real_critical_points(f)?.into_iter().filter(|x| (x - e.b).abs() <= e.delta).collect();
    let values: Vec<f64> = near.iter().map(|&x| real_value(f, x)).collect();
    let two = near.len() == 2 && values[0] < values[1];
    claims.push(Claim::new(
        "critical_points_near_b",
        two,
        format!("critical points within {:.4} of b = {:.12}: {near:?} with values {values:?}", e.delta, e.b),
    ));
    if !two {
        return Ok(claims);
    }
    let (c1, c2) = (values[0], values[1]);
    let spread = (c1 - e.c).abs().max((c2 - e.c).abs());
    claims.push(Claim::new(
        "critical_values_straddle_c",
        c1 < e.c && e.c < c2 && spread <= e.delta,
        format!("c1 = {c1:.12} < c = {:.12} < c2 = {c2:.12}, max |c_i - c| = {spread:.3e}", e.c),
    ));

    // [c1, c2] stays in (p, a), where f is negative: one more step leaves [0, 1]
    let inside = p < c1 && c2 < a;
    let worst = (0..=256)
        .map(|k| c1 + (c2 - c1) * k as f64 / 256.0)
        .map(|x| real_value(f, x))
        .fold(f64::NEG_INFINITY, f64::max);
    claims.push(Claim::new(
        "second_iterate_escape",
        inside && worst < 0.0,
        format!("[c1, c2] inside (p, a) = {inside}; max of f on [c1, c2] = {worst:.6}"),
    ));

    let report = theorem2_classify(f, GeneralizedCircle::real_line())?;
    let times: Vec<Option<usize>> = report.escape_times.iter().map(|t| t.escape).collect();
    claims.push(Claim::new(
        "escape_time_two",
        report.verdict == Verdict::CircleCaseIii && times.len() >= 2 && times.iter().all(|t| *t == Some(2)),
        format!("verdict {:?}, escape times of critical points in I: {times:?}", report.verdict),
    ));
    claims.push(julia_real_claim(f)?);
    Ok(claims)
}

pub fn verify_example_claims(inst: &ExampleInstance) -> Result<ClaimsReport, RealJuliaError> {
    let claims = match (inst.spec, &inst.ex3) {
        (ExampleSpec::Ex1 { c }, _) => ex1_claims(c, &inst.map)?,
        (ExampleSpec::Ex2 { .. }, _) => ex2_claims(&inst.map)?,
        (ExampleSpec::Ex3 { p, a, .. }, Some(e)) => ex3_claims(e, p, a, &inst.map)?,
        (ExampleSpec::Ex3 { .. }, None) => {
            return Err(RealJuliaError::Ex3ConstructionFailed("instance carries no construction data".into()))
        }
    };
    let pass = claims.iter().all(|c| c.status != ClaimStatus::Fail);
    Ok(ClaimsReport { spec: inst.spec, expression: inst.expression.clone(), ex3: inst.ex3.clone(), claims, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub c1_distance: f64,
    pub c2_distance: f64,
}

/// `|c_i - c|` for the third family along a sequence of `eps`, and whether
/// both distances decrease.
pub fn ex3_convergence(p: f64, a: f64, eps: &[f64]) -> Result<(Vec<ConvergenceRow>, bool), RealJuliaError> {
    let mut rows = Vec::with_capacity(eps.len());
    for &e in eps {
        let inst = build_example(ExampleSpec::Ex3 { p, a, eps: e })?;
        let data = inst.ex3.clone().expect("third family carries its construction");
        let near: Vec<f64> = real_critical_points(&inst.map)?.into_iter().filter(|x| (x - data.b).abs() <= data.delta).collect();
        if near.len() != 2 {
            return Err(RealJuliaError::Ex3ConstructionFailed(format!(
                "eps = {e}: expected two critical points near b, found {}",
                near.len()
            )));
        }
        let v: Vec<f64> = near.iter().map(|&x| real_value(&inst.map, x)).collect();
        let (lo, hi) = if v[0] <= v[1] { (v[0], v[1]) } else { (v[1], v[0]) };
        rows.push(ConvergenceRow { eps: e, c1_distance: (lo - data.c).abs(), c2_distance: (hi - data.c).abs() });
    }
    let decreasing = rows.windows(2).all(|w| w[1].c1_distance < w[0].c1_distance && w[1].c2_distance < w[0].c2_distance);
    Ok((rows, decreasing))
}
