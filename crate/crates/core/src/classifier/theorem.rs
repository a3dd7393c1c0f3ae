use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::{
    detect_exceptional, postcritical_analysis, CaseOneDetail, ClassificationReport, ClassifierError, ClassifierOptions,
    EscapeTime, Exceptional, Verdict, DEFAULT_DEPTH,
};
use crate::algebra::{Moebius, RationalMap, SpherePoint};
use crate::dynamics::{julia_cloud, periodic_points, real_multiplier_test, Stability};
use crate::geometry::{
    best_circle_seeded, invariance_check, normalize_to_real_line, GeneralizedCircle, CIRCLE_THRESHOLD,
};
use crate::roots;

/// A critical point closer than this to the circle counts as on it.
const ON_CIRCLE: f64 = 1e-6;
/// Gap fraction at or below which the cloud fills the circle.
const DENSITY_THRESHOLD: f64 = 1e-3;
/// Slack on the multiplier range `[-1, 1]` for the base fixed point.
const LAMBDA_SLACK: f64 = 1e-9;
const GRID: usize = 4000;

/// Full verdict with default options and the given period bound.
pub fn theorem1_verdict(f: &RationalMap, n_max: usize) -> Result<ClassificationReport, ClassifierError> {
    theorem1_verdict_with(f, &ClassifierOptions { n_max, ..ClassifierOptions::default() })
}

/// Real-multiplier test, then circle search, then the case analysis or
/// exceptional-map recognition.
pub fn theorem1_verdict_with(f: &RationalMap, opts: &ClassifierOptions) -> Result<ClassificationReport, ClassifierError> {
    let rm = real_multiplier_test(f, opts.n_max, opts.tol)?;
    if !rm.pass {
        let mut r = ClassificationReport::empty(Verdict::NoRealStructure);
        r.real_multiplier = Some(rm);
        return Ok(r);
    }
    let cloud = julia_cloud(f, opts.cloud_size, opts.seed)?;
    let seeds: Vec<SpherePoint> = rm
        .table
        .iter()
        .filter(|row| row.stability == Stability::Repelling)
        .flat_map(|row| row.points.iter().copied())
        .collect();
    let (circle, residual) = best_circle_seeded(&cloud, &seeds)?;
    let mut report = if residual <= CIRCLE_THRESHOLD {
        classify_in_circle(f, circle, opts, &cloud)?
    } else {
        let exceptional = detect_exceptional(f);
        let mut r = ClassificationReport::empty(match exceptional {
            Exceptional::Lattes => Verdict::Lattes,
            Exceptional::Power => Verdict::PowerConjugate,
            Exceptional::Chebyshev => Verdict::ChebyshevConjugate,
            Exceptional::None => Verdict::Inconclusive,
        });
        r.exceptional = Some(exceptional);
        if exceptional == Exceptional::None {
            r.notes.push(format!("no circle within {CIRCLE_THRESHOLD:e} (best residual {residual:e}) and no Lattès structure"));
        }
        r
    };
    report.residuals.circle = Some(residual);
    report.residuals.cloud_size = cloud.len();
    report.real_multiplier = Some(rm);
    Ok(report)
}

/// Case analysis for a map whose Julia set lies in `circle`.
pub fn theorem2_classify(f: &RationalMap, circle: GeneralizedCircle) -> Result<ClassificationReport, ClassifierError> {
    theorem2_classify_with(f, circle, &ClassifierOptions::default())
}

pub fn theorem2_classify_with(
    f: &RationalMap,
    circle: GeneralizedCircle,
    opts: &ClassifierOptions,
) -> Result<ClassificationReport, ClassifierError> {
    let cloud = julia_cloud(f, opts.cloud_size, opts.seed)?;
    let mut r = classify_in_circle(f, circle, opts, &cloud)?;
    r.residuals.cloud_size = cloud.len();
    Ok(r)
}

// Fitted circles that agree with the real line or the unit circle to
// rounding are replaced by the exact locus, so normalization is exact.
fn snap(circle: GeneralizedCircle) -> GeneralizedCircle {
    let (a, b, c) = (circle.a(), circle.b(), circle.c());
    if a.abs() < 1e-9 && c.abs() < 1e-9 && b.re.abs() < 1e-9 {
        GeneralizedCircle::real_line()
    } else if (a - 1.0).abs() < 1e-9 && b.norm() < 1e-9 && (c + 1.0).abs() < 1e-9 {
        GeneralizedCircle::unit_circle()
    } else {
        circle
    }
}

fn real_cleaned(g: RationalMap) -> RationalMap {
    let g = g.normalized();
    if g.is_real(1e-9) { g.real_part() } else { g }
}

fn angle(p: &SpherePoint) -> f64 {
    match p {
        SpherePoint::Infinity => PI,
        SpherePoint::Finite(z) => 2.0 * z.re.atan(),
    }
}

fn sorted_angles(cloud: &[SpherePoint]) -> Vec<f64> {
    let mut t: Vec<f64> = cloud.iter().map(angle).collect();
    t.sort_by(f64::total_cmp);
    t
}

fn max_gap_fraction(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 1.0;
    }
    let wrap = angles[0] + TAU - angles[angles.len() - 1];
    angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max) / TAU
}

fn classify_in_circle(
    f: &RationalMap,
    circle: GeneralizedCircle,
    opts: &ClassifierOptions,
    cloud: &[SpherePoint],
) -> Result<ClassificationReport, ClassifierError> {
    let circle = snap(circle);
    let m = normalize_to_real_line(&circle)?;
    let g = real_cleaned(f.conjugate(&m));
    let line = GeneralizedCircle::real_line();
    let cloud_n: Vec<SpherePoint> = cloud.iter().map(|p| m.apply(*p)).collect();

    let mut report = ClassificationReport::empty(Verdict::Inconclusive);
    report.circle = Some(circle);
    report.normalizer = Some(m);

    let crit = g.critical_points().map_err(|_| crate::dynamics::DynamicsError::PreimageSolveFailed)?;
    let crit_on_line = crit.iter().any(|c| line.residual(c) <= ON_CIRCLE);
    let inv = invariance_check(&g, &line)?;
    report.residuals.forward_invariance = Some(inv.forward_residual);
    report.residuals.preimage = Some(inv.preimage_residual);
    report.residuals.complete_invariance = Some(inv.complete_invariance);

    if !crit_on_line || inv.complete_invariance {
        let gap = max_gap_fraction(&sorted_angles(&cloud_n));
        let probe = [Complex64::new(0.0, 1.0), Complex64::new(0.37, 1.3)]
            .into_iter()
            .filter_map(|z| g.eval_complex(z).finite())
            .find(|w| w.im.abs() > 1e-9);
        report.verdict = Verdict::CircleCaseI;
        report.case_i = Some(CaseOneDetail {
            julia_is_circle: gap <= DENSITY_THRESHOLD,
            max_gap_fraction: gap,
            swaps_components: probe.is_some_and(|w| w.im < 0.0),
        });
        return Ok(report);
    }

    // base fixed point x0 with real multiplier in [-1, 1]
    let candidates: Vec<(SpherePoint, f64, Stability)> = periodic_points(&g, 1)?
        .into_iter()
        .filter(|o| line.residual(&o.points[0]) <= 1e-8)
        .filter(|o| o.multiplier.im.abs() <= LAMBDA_SLACK && o.multiplier.re.abs() <= 1.0 + LAMBDA_SLACK)
        .map(|o| (o.points[0], o.multiplier.re, o.stability))
        .collect();
    if candidates.is_empty() {
        report.notes.push("no real fixed point with multiplier in [-1, 1]".into());
        return Ok(report);
    }
    let (x0, lambda, stability) = if candidates.len() == 1 {
        candidates[0]
    } else {
        let end = g.iterate(SpherePoint::new(0.31, 0.83), 4000);
        candidates
            .iter()
            .copied()
            .min_by(|a, b| a.0.chordal_distance(&end).total_cmp(&b.0.chordal_distance(&end)))
            .expect("non-empty")
    };
    let x0 = match x0 {
        SpherePoint::Finite(z) if x0.chordal_distance(&SpherePoint::Infinity) > 1e-9 => SpherePoint::real(z.re),
        _ => SpherePoint::Infinity,
    };
    report.x0 = Some(x0);
    report.lambda_x0 = Some(lambda);

    // chart sending a point of the Fatou set to infinity
    let pole = if stability == Stability::Attracting {
        x0
    } else {
        // a neutral x0 lies in J (the cloud is sparse near parabolic points),
        // so the gaps are measured from x0 itself
        let t0 = angle(&x0);
        let angles: Vec<f64> = sorted_angles(&cloud_n).into_iter().filter(|&t| (t - t0).abs() > 1e-12).collect();
        let below = angles.iter().copied().rfind(|&t| t < t0).unwrap_or_else(|| angles.last().map_or(t0 - TAU, |&t| t - TAU));
        let above = angles.iter().copied().find(|&t| t > t0).unwrap_or_else(|| angles.first().map_or(t0 + TAU, |&t| t + TAU));
        let mid = if above - t0 >= t0 - below { (t0 + above) / 2.0 } else { (below + t0) / 2.0 };
        let mid = (mid + PI).rem_euclid(TAU) - PI;
        if (mid.abs() - PI).abs() < 1e-12 { SpherePoint::Infinity } else { SpherePoint::real((mid / 2.0).tan()) }
    };
    let h = match pole {
        SpherePoint::Infinity => Moebius::identity(),
        SpherePoint::Finite(q) => {
            Moebius::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(q.re, 0.0))
                .expect("non-degenerate")
        }
    };
    let big_f = real_cleaned(g.conjugate(&h));
    let chart = h.compose(&m);
    report.interval_chart = Some(chart);

    let xs: Vec<f64> = cloud_n.iter().filter_map(|p| h.apply(*p).finite()).map(|z| z.re).collect();
    if xs.is_empty() {
        report.notes.push("empty real cloud".into());
        return Ok(report);
    }
    let (mut a, mut b) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let exact = if stability == Stability::Attracting {
        None
    } else {
        h.apply(x0).finite().map(|z| z.re)
    };
    let (pa, pb, endpoint_residual, note) = polish_endpoints(&big_f, a, b, exact);
    if let Some(n) = note {
        report.notes.push(n);
    }
    if pa < pb {
        a = pa;
        b = pb;
    }
    report.interval_i = Some((a, b));
    report.residuals.endpoint_residual = Some(endpoint_residual);

    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let inner_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max) / (b - a);
    report.residuals.interval_max_gap = Some(inner_gap);

    let margin = image_margin(&big_f, a, b);
    report.residuals.interval_margin = Some(margin);
    let tol = 1e-6 * (b - a).max(1.0);
    report.verdict = if margin <= tol { Verdict::CircleCaseIi } else { Verdict::CircleCaseIii };
    report.escape_times = escape_times_in_chart(&big_f, a, b, opts.escape_cap);
    Ok(report)
}

/// One endpoint `e` is a fixed point lying in the Julia set, so it is an
/// endpoint of `I`; the other is either fixed or mapped onto `e`. The cloud
/// is sparse near neutral points, so the hull only bounds it from inside.
fn polish_pinned(f: &RationalMap, a: f64, b: f64, e: f64) -> (f64, f64, f64, Option<String>) {
    let pin_a = (e - a).abs() <= (e - b).abs();
    let other = if pin_a { b } else { a };
    let width = b - a;
    let slack = 1e-6 * width.max(1.0);
    let fixed = newton(other, |t| value_and_slope(f, t).map(|(v, d)| (v - t, d - 1.0)));
    let onto = newton(other, |t| value_and_slope(f, t).map(|(v, d)| (v - e, d)));
    let residual = |x: f64| match eval_real(f, x) {
        Some(v) => (v - x).abs().min((v - e).abs()),
        None => f64::INFINITY,
    };
    let outside = |x: f64| if pin_a { x >= other - slack } else { x <= other + slack };
    let best = [fixed, onto]
        .into_iter()
        .filter(|&x| x.is_finite() && outside(x) && (x - e).abs() > slack && residual(x) <= 1e-9 * width.max(1.0))
        .min_by(|x, y| (x - other).abs().total_cmp(&(y - other).abs()));
    match best {
        Some(x) => {
            let (na, nb) = if pin_a { (e, x) } else { (x, e) };
            (na, nb, residual(x).max(residual(e)), None)
        }
        None => (a, b, f64::NAN, Some("endpoint relation not recognized; hull endpoints kept".into())),
    }
}

fn eval_real(f: &RationalMap, x: f64) -> Option<f64> {
    f.eval_complex(Complex64::new(x, 0.0)).finite().map(|z| z.re).filter(|v| v.is_finite())
}

fn newton(mut x: f64, g: impl Fn(f64) -> Option<(f64, f64)>) -> f64 {
    for _ in 0..60 {
        let Some((v, dv)) = g(x) else { break };
        if dv == 0.0 || !dv.is_finite() {
            break;
        }
        let step = v / dv;
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

fn value_and_slope(f: &RationalMap, x: f64) -> Option<(f64, f64)> {
    let v = eval_real(f, x)?;
    let d = f.derivative_at(Complex64::new(x, 0.0)).re;
    Some((v, d))
}

/// Endpoints of `I` refined so that `{f(a), f(b)} ⊆ {a, b}`; the endpoint
/// closest to `exact` is pinned to it.
fn polish_endpoints(f: &RationalMap, a: f64, b: f64, exact: Option<f64>) -> (f64, f64, f64, Option<String>) {
    let tol = 1e-3 * (b - a);
    let target = |x: f64| -> Option<bool> {
        let v = eval_real(f, x)?;
        if (v - a).abs() < tol {
            Some(false)
        } else if (v - b).abs() < tol {
            Some(true)
        } else {
            None
        }
    };
    if let Some(e) = exact {
        return polish_pinned(f, a.min(e), b.max(e), e);
    }
    let pin_a = exact.is_some_and(|e| (e - a).abs() <= (e - b).abs());
    let pin_b = exact.is_some() && !pin_a;
    let fixed = |x: f64, pinned: bool| -> f64 {
        if pinned {
            exact.unwrap_or(x)
        } else {
            newton(x, |t| value_and_slope(f, t).map(|(v, d)| (v - t, d - 1.0)))
        }
    };
    let onto = |x: f64, y: f64| newton(x, |t| value_and_slope(f, t).map(|(v, d)| (v - y, d)));
    let (na, nb) = match (target(a), target(b)) {
        // both fixed
        (Some(false), Some(true)) => (fixed(a, pin_a), fixed(b, pin_b)),
        // a 2-cycle
        (Some(true), Some(false)) => {
            let na = newton(a, |t| {
                let (v, d) = value_and_slope(f, t)?;
                let (w, e) = value_and_slope(f, v)?;
                Some((w - t, e * d - 1.0))
            });
            (na, eval_real(f, na).unwrap_or(b))
        }
        // a fixed, b onto a
        (Some(false), Some(false)) => {
            let na = fixed(a, pin_a);
            (na, onto(b, na))
        }
        // b fixed, a onto b
        (Some(true), Some(true)) => {
            let nb = fixed(b, pin_b);
            (onto(a, nb), nb)
        }
        _ => return (a, b, f64::NAN, Some("endpoint relation not recognized; hull endpoints kept".into())),
    };
    let res = [na, nb]
        .iter()
        .map(|&x| match eval_real(f, x) {
            Some(v) => (v - na).abs().min((v - nb).abs()),
            None => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    (na, nb, res, None)
}

fn real_critical_points(f: &RationalMap, a: f64, b: f64) -> Vec<f64> {
    f.critical_points()
        .unwrap_or_default()
        .into_iter()
        .filter_map(|c| c.finite())
        .filter(|z| z.im.abs() <= ON_CIRCLE && z.re >= a - 1e-9 && z.re <= b + 1e-9)
        .map(|z| z.re)
        .collect()
}

/// `max(sup f(I) - b, a - inf f(I))`, infinite when `f` has a pole in `I`.
fn image_margin(f: &RationalMap, a: f64, b: f64) -> f64 {
    if !f.den().is_zero() && f.den().degree() > 0 {
        if let Ok(rs) = roots::all_roots(f.den(), roots::DEFAULT_TOLERANCE) {
            if rs.roots.iter().any(|r| r.im.abs() < 1e-9 && r.re >= a && r.re <= b) {
                return f64::INFINITY;
            }
        }
    }
    let mut xs: Vec<f64> = (0..=GRID).map(|k| a + (b - a) * k as f64 / GRID as f64).collect();
    xs.extend(real_critical_points(f, a, b));
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in xs {
        match eval_real(f, x) {
            Some(v) => {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            None => return f64::INFINITY,
        }
    }
    (hi - b).max(a - lo)
}

fn escape_times_in_chart(f: &RationalMap, a: f64, b: f64, cap: usize) -> Vec<EscapeTime> {
    let tol = 1e-9 * (b - a).max(1.0);
    let analysis = postcritical_analysis(f, DEFAULT_DEPTH);
    let mut out: Vec<EscapeTime> = Vec::new();
    for x in real_critical_points(f, a, b) {
        if out.iter().any(|e| (e.point - x).abs() < 1e-9) {
            continue;
        }
        let mut cur = SpherePoint::real(x);
        let mut escape = None;
        for n in 1..=cap {
            cur = f.eval(cur);
            let inside = cur.finite().is_some_and(|z| z.im.abs() <= ON_CIRCLE && z.re > a + tol && z.re < b - tol);
            if !inside {
                escape = Some(n);
                break;
            }
        }
        let preperiodic = analysis
            .critical
            .iter()
            .find(|o| o.point.chordal_distance(&SpherePoint::real(x)) < 1e-6)
            .is_some_and(|o| o.is_finite());
        out.push(EscapeTime { point: x, escape, preperiodic, capped: escape.is_none() });
    }
    out.sort_by(|p, q| p.point.total_cmp(&q.point));
    out
}

/// Escape times of the critical points in `I` for an interval-case report.
pub fn critical_escape_times(
    f: &RationalMap,
    report: &ClassificationReport,
    cap: usize,
) -> Result<Vec<EscapeTime>, ClassifierError> {
    let (Some(chart), Some((a, b))) = (report.interval_chart, report.interval_i) else {
        return Err(ClassifierError::NotIntervalCase);
    };
    Ok(escape_times_in_chart(&real_cleaned(f.conjugate(&chart)), a, b, cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_map;

    fn quick() -> ClassifierOptions {
        ClassifierOptions { n_max: 4, cloud_size: 6000, ..ClassifierOptions::default() }
    }

    #[test]
    fn square_is_case_one_circle() {
        let r = theorem1_verdict_with(&parse_map("z^2").unwrap(), &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::CircleCaseI);
        assert!(r.interval_i.is_none());
    }

    #[test]
    fn chebyshev_is_case_two() {
        let f = parse_map("z^2-2").unwrap();
        let r = theorem1_verdict_with(&f, &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::CircleCaseIi, "{r:#?}");
        let (a, b) = r.interval_i.unwrap();
        assert!((a + 2.0).abs() < 1e-8 && (b - 2.0).abs() < 1e-8);
        assert_eq!(r.x0, Some(SpherePoint::Infinity));
        assert!(r.lambda_x0.unwrap().abs() < 1e-12);
        assert_eq!(r.escape_times.len(), 1);
        assert_eq!(r.escape_times[0].escape, Some(1));
        assert_eq!(critical_escape_times(&f, &r, 10).unwrap(), r.escape_times);
    }

    #[test]
    fn complex_multiplier_has_no_real_structure() {
        let r = theorem1_verdict(&parse_map("z^2+1").unwrap(), 3).unwrap();
        assert_eq!(r.verdict, Verdict::NoRealStructure);
        assert_eq!(r.exit_code(), 4);
    }

    #[test]
    fn gap_fraction() {
        assert!((max_gap_fraction(&[0.0, PI]) - 0.5).abs() < 1e-15);
    }
}
