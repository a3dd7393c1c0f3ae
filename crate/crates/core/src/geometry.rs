//! Generalized circles (circles and lines) on the Riemann sphere.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Moebius, RationalMap, SpherePoint};
use crate::par;

/// Residual at or below which a cloud is declared to lie on a circle.
pub const CIRCLE_THRESHOLD: f64 = 1e-4;
/// Residual below which a preimage counts as lying on the circle.
pub const ON_CIRCLE_TOLERANCE: f64 = 1e-6;

const DISTINCT: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("points are not pairwise distinct")]
    DegeneratePoints,
    #[error("cloud does not determine a circle")]
    DegenerateCloud,
    #[error("degenerate circle: |B|^2 - AC <= 0")]
    DegenerateCircle,
    #[error("preimage solve failed")]
    PreimageSolveFailed,
}

/// The locus `A|z|^2 + 2 Re(conj(B) z) + C = 0`; lines have `A = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircleJson", into = "CircleJson")]
pub struct GeneralizedCircle {
    a: f64,
    b: Complex64,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct CircleJson {
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: [f64; 2],
    #[serde(rename = "C")]
    c: f64,
}

impl From<GeneralizedCircle> for CircleJson {
    fn from(k: GeneralizedCircle) -> Self {
        CircleJson { a: k.a, b: [k.b.re, k.b.im], c: k.c }
    }
}

impl TryFrom<CircleJson> for GeneralizedCircle {
    type Error = GeometryError;
    fn try_from(j: CircleJson) -> Result<Self, Self::Error> {
        GeneralizedCircle::new(j.a, Complex64::new(j.b[0], j.b[1]), j.c)
    }
}

impl GeneralizedCircle {
    /// Normalizes to `max(|A|, |B|, |C|) = 1` with the first non-zero entry
    /// of `(A, Re B, Im B, C)` positive.
    pub fn new(a: f64, b: Complex64, c: f64) -> Result<Self, GeometryError> {
        let scale = a.abs().max(b.norm()).max(c.abs());
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(GeometryError::DegenerateCircle);
        }
        let (mut a, mut b, mut c) = (a / scale, b / scale, c / scale);
        if b.norm_sqr() - a * c <= 1e-14 {
            return Err(GeometryError::DegenerateCircle);
        }
        let lead = [a, b.re, b.im, c].into_iter().find(|v| v.abs() > 1e-12).unwrap_or(1.0);
        if lead < 0.0 {
            a = -a;
            b = -b;
            c = -c;
        }
        Ok(Self { a, b, c })
    }

    pub fn real_line() -> Self {
        Self { a: 0.0, b: Complex64::new(0.0, 1.0), c: 0.0 }
    }

    pub fn unit_circle() -> Self {
        Self { a: 1.0, b: Complex64::new(0.0, 0.0), c: -1.0 }
    }

    pub fn from_center_radius(center: Complex64, radius: f64) -> Result<Self, GeometryError> {
        Self::new(1.0, -center, center.norm_sqr() - radius * radius)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn is_line(&self) -> bool {
        self.a.abs() <= 1e-14
    }

    /// The same locus in the coordinate `w = 1/z`.
    pub fn inverted(&self) -> Self {
        Self { a: self.c, b: self.b.conj(), c: self.a }
    }

    /// Center and radius, for proper circles.
    pub fn center_radius(&self) -> Option<(Complex64, f64)> {
        if self.is_line() {
            return None;
        }
        let center = -self.b / self.a;
        Some((center, ((self.b.norm_sqr() - self.a * self.c) / (self.a * self.a)).sqrt()))
    }

    fn finite_distance(&self, z: Complex64) -> f64 {
        match self.center_radius() {
            Some((center, r)) => ((z - center).norm() - r).abs(),
            None => (2.0 * (self.b.conj() * z).re + self.c).abs() / (2.0 * self.b.norm()),
        }
    }

    /// Euclidean distance from `p` to the locus, measured in the chart
    /// where `p` has modulus at most one.
    pub fn residual(&self, p: &SpherePoint) -> f64 {
        match *p {
            SpherePoint::Finite(z) if z.norm() <= 1.0 => self.finite_distance(z),
            SpherePoint::Finite(z) => self.inverted().finite_distance(z.inv()),
            SpherePoint::Infinity => self.inverted().finite_distance(Complex64::new(0.0, 0.0)),
        }
    }

    pub fn contains(&self, p: &SpherePoint, tol: f64) -> bool {
        self.residual(p) <= tol
    }

    /// Point of the locus at parameter `t` in `[0, 1)`; `t = 1/2` is
    /// infinity for lines.
    pub fn point_at(&self, t: f64) -> SpherePoint {
        let theta = TAU * t;
        match self.center_radius() {
            Some((center, r)) => SpherePoint::Finite(center + Complex64::from_polar(r, theta)),
            None => {
                let (p0, dir) = self.line_frame();
                // x = tan(theta/2) runs over the extended line
                let half = theta / 2.0;
                if (half - PI / 2.0).abs() < 1e-15 {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite(p0 + dir * half.tan())
                }
            }
        }
    }

    /// `n` points equally spaced in the circle's natural angle.
    pub fn sample(&self, n: usize) -> Vec<SpherePoint> {
        (0..n).map(|k| self.point_at(k as f64 / n as f64)).collect()
    }

    // Foot of the perpendicular from the origin and a unit direction.
    fn line_frame(&self) -> (Complex64, Complex64) {
        let nb = self.b.norm();
        let p0 = -self.b * (self.c / (2.0 * nb * nb));
        let dir = Complex64::new(0.0, -1.0) * self.b / nb;
        (p0, dir)
    }

    /// Three reference points used to normalize the circle.
    pub fn frame_points(&self) -> [SpherePoint; 3] {
        match self.center_radius() {
            Some((center, r)) => [
                SpherePoint::Finite(center + r),
                SpherePoint::Finite(center + Complex64::new(0.0, r)),
                SpherePoint::Finite(center - r),
            ],
            None => {
                let (p0, dir) = self.line_frame();
                [SpherePoint::Finite(p0), SpherePoint::Finite(p0 + dir), SpherePoint::Infinity]
            }
        }
    }

    /// Image of the locus under a Moebius map.
    pub fn transformed(&self, m: &Moebius) -> Result<Self, GeometryError> {
        let [p, q, r] = self.frame_points();
        circle_through_3(m.apply(p), m.apply(q), m.apply(r))
    }
}

// Row of the design system for the Hermitian form at a point with unit
// homogeneous coordinates.
fn design_row(p: &SpherePoint) -> [f64; 4] {
    let (x, y) = p.homogeneous();
    let xy = x * y.conj();
    [x.norm_sqr(), 2.0 * xy.re, 2.0 * xy.im, y.norm_sqr()]
}

fn smallest_singular_vector(rows: &[[f64; 4]]) -> Option<[f64; 4]> {
    let n = rows.len().max(4);
    let mut m = DMatrix::<f64>::zeros(n, 4);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..4 {
            m[(i, j)] = r[j];
        }
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t?;
    let k = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k)?;
    Some([vt[(k, 0)], vt[(k, 1)], vt[(k, 2)], vt[(k, 3)]])
}

fn circle_from_vector(v: [f64; 4]) -> Result<GeneralizedCircle, GeometryError> {
    GeneralizedCircle::new(v[0], Complex64::new(v[1], v[2]), v[3])
}

/// The unique generalized circle through three distinct points.
pub fn circle_through_3(p1: SpherePoint, p2: SpherePoint, p3: SpherePoint) -> Result<GeneralizedCircle, GeometryError> {
    if p1.chordal_distance(&p2) <= DISTINCT || p1.chordal_distance(&p3) <= DISTINCT || p2.chordal_distance(&p3) <= DISTINCT {
        return Err(GeometryError::DegeneratePoints);
    }
    let v = smallest_singular_vector(&[design_row(&p1), design_row(&p2), design_row(&p3)])
        .ok_or(GeometryError::DegeneratePoints)?;
    circle_from_vector(v).map_err(|_| GeometryError::DegeneratePoints)
}

/// Largest residual over the cloud (zero for an empty cloud).
pub fn containment_residual(circle: &GeneralizedCircle, cloud: &[SpherePoint]) -> f64 {
    par::map_slice(cloud, |p| circle.residual(p)).into_iter().fold(0.0, f64::max)
}

/// Least-squares circle through the cloud and its residual.
pub fn best_circle(cloud: &[SpherePoint]) -> Result<(GeneralizedCircle, f64), GeometryError> {
    if cloud.len() < 3 {
        return Err(GeometryError::DegenerateCloud);
    }
    let rows: Vec<[f64; 4]> = cloud.iter().map(design_row).collect();
    let v = smallest_singular_vector(&rows).ok_or(GeometryError::DegenerateCloud)?;
    let circle = circle_from_vector(v).map_err(|_| GeometryError::DegenerateCloud)?;
    Ok((circle, containment_residual(&circle, cloud)))
}

/// Like [`best_circle`], but also tries the circle through the three most
/// spread-out seed points and keeps whichever fits the cloud better.
pub fn best_circle_seeded(cloud: &[SpherePoint], seeds: &[SpherePoint]) -> Result<(GeneralizedCircle, f64), GeometryError> {
    let fitted = best_circle(cloud);
    let seeded = spread_triple(seeds)
        .and_then(|[p, q, r]| circle_through_3(p, q, r).ok())
        .map(|k| (k, containment_residual(&k, cloud)));
    match (fitted, seeded) {
        (Ok(a), Some(b)) => Ok(if b.1 < a.1 { b } else { a }),
        (Ok(a), None) => Ok(a),
        (Err(_), Some(b)) if cloud.len() >= 3 => Ok(b),
        (Err(e), _) => Err(e),
    }
}

fn spread_triple(points: &[SpherePoint]) -> Option<[SpherePoint; 3]> {
    if points.len() < 3 {
        return None;
    }
    let mut best: Option<(f64, [SpherePoint; 3])> = None;
    let n = points.len().min(24);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (p, q, r) = (points[i], points[j], points[k]);
                let s = p.chordal_distance(&q).min(p.chordal_distance(&r)).min(q.chordal_distance(&r));
                if best.as_ref().is_none_or(|b| s > b.0) {
                    best = Some((s, [p, q, r]));
                }
            }
        }
    }
    best.filter(|b| b.0 > DISTINCT).map(|b| b.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    /// Largest residual of `f(p)` over sampled circle points.
    pub forward_residual: f64,
    /// Largest residual over all preimages of the tested points.
    pub preimage_residual: f64,
    /// Every preimage of every tested point lies on the circle.
    pub complete_invariance: bool,
    pub forward_samples: usize,
    pub preimage_samples: usize,
}

/// Forward invariance on 256 circle points and complete invariance on 64
/// points plus points straddling each critical value on the circle.
pub fn invariance_check(f: &RationalMap, circle: &GeneralizedCircle) -> Result<InvarianceReport, GeometryError> {
    invariance_check_with(f, circle, 256, 64)
}

pub fn invariance_check_with(
    f: &RationalMap,
    circle: &GeneralizedCircle,
    forward: usize,
    backward: usize,
) -> Result<InvarianceReport, GeometryError> {
    // offsets keep samples away from special points such as infinity
    let shifted = |n: usize| -> Vec<SpherePoint> { (0..n).map(|k| circle.point_at((k as f64 + 0.37) / n as f64)).collect() };
    let forward_points = shifted(forward);
    let forward_residual = containment_residual(circle, &par::map_slice(&forward_points, |p| f.eval(*p)));

    let mut tests = shifted(backward);
    let m = normalize_to_real_line(circle)?;
    let inv = m.inverse();
    let crit = f.critical_points().map_err(|_| GeometryError::PreimageSolveFailed)?;
    for c in crit.iter().filter(|c| circle.contains(c, 1e-7)) {
        let v = m.apply(f.eval(*c));
        if let Some(x) = v.as_real(1e-6) {
            for delta in [1e-3, 1e-2] {
                let scale = delta * (1.0 + x.abs());
                tests.push(inv.apply(SpherePoint::real(x - scale)));
                tests.push(inv.apply(SpherePoint::real(x + scale)));
            }
        }
    }
    let pre = par::map_slice(&tests, |p| f.preimages(*p));
    let mut preimage_residual: f64 = 0.0;
    for set in pre {
        let set = set.map_err(|_| GeometryError::PreimageSolveFailed)?;
        preimage_residual = preimage_residual.max(containment_residual(circle, &set));
    }
    Ok(InvarianceReport {
        forward_residual,
        preimage_residual,
        complete_invariance: preimage_residual <= ON_CIRCLE_TOLERANCE,
        forward_samples: forward,
        preimage_samples: tests.len(),
    })
}

/// A Moebius map taking the circle onto the extended real line, sending
/// its three frame points to `0, 1, infinity`.
pub fn normalize_to_real_line(circle: &GeneralizedCircle) -> Result<Moebius, GeometryError> {
    let [p, q, r] = circle.frame_points();
    Moebius::to_zero_one_infinity(p, q, r).map_err(|_| GeometryError::DegeneratePoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_map;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> SpherePoint {
        SpherePoint::new(re, im)
    }

    #[test]
    fn three_point_circles() {
        let k = circle_through_3(c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(k.a(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.b().norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.c(), -1.0, epsilon = 1e-12);

        let line = circle_through_3(c(0.0, 0.0), c(1.0, 0.0), SpherePoint::Infinity).unwrap();
        assert_eq!(line.a(), 0.0);
        assert!(line.b().re.abs() < 1e-12);

        let pts = [c(0.0, 0.0), c(1.0, 1.0), c(2.0, 0.0)];
        let k = circle_through_3(pts[0], pts[1], pts[2]).unwrap();
        let (center, r) = k.center_radius().unwrap();
        assert!((center - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
        assert!(containment_residual(&k, &pts) < 1e-12);
    }

    #[test]
    fn degenerate_points_rejected() {
        assert_eq!(circle_through_3(c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)), Err(GeometryError::DegeneratePoints));
    }

    #[test]
    fn residual_near_infinity() {
        let line = GeneralizedCircle::real_line();
        assert_eq!(line.residual(&SpherePoint::Infinity), 0.0);
        assert!(line.residual(&c(1e9, 0.0)) < 1e-20);
        assert!((line.residual(&c(0.0, 2.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fit_circle_of_radius_two() {
        let cloud: Vec<_> = (0..200).map(|k| SpherePoint::Finite(Complex64::from_polar(2.0, k as f64 * 0.1))).collect();
        let (k, res) = best_circle(&cloud).unwrap();
        assert!(res < 1e-10);
        let (center, r) = k.center_radius().unwrap();
        assert!(center.norm() < 1e-10 && (r - 2.0).abs() < 1e-10);
    }

    #[test]
    fn normalization() {
        let m = normalize_to_real_line(&GeneralizedCircle::real_line()).unwrap();
        assert!(m.is_identity(1e-14));
        for k in [GeneralizedCircle::unit_circle(), GeneralizedCircle::from_center_radius(Complex64::new(1.0, 0.0), 2.0).unwrap()] {
            let m = normalize_to_real_line(&k).unwrap();
            for p in k.sample(20) {
                assert!(m.apply(p).distance_to_real_line() < 1e-9);
            }
        }
    }

    #[test]
    fn invariance_of_unit_circle_under_square() {
        let r = invariance_check(&parse_map("z^2").unwrap(), &GeneralizedCircle::unit_circle()).unwrap();
        assert!(r.forward_residual < 1e-14);
        assert!(r.complete_invariance);
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&GeneralizedCircle::real_line()).unwrap();
        assert_eq!(s, r#"{"A":0.0,"B":[0.0,1.0],"C":0.0}"#);
        let back: GeneralizedCircle = serde_json::from_str(&s).unwrap();
        assert_eq!(back, GeneralizedCircle::real_line());
    }
}
