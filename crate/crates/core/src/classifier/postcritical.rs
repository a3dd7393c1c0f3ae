use serde::{Deserialize, Serialize};

use super::Exceptional;
use crate::algebra::{RationalMap, SpherePoint};
use crate::dynamics::cycle_multiplier;

/// Default orbit depth.
pub const DEFAULT_DEPTH: usize = 60;
/// Two orbit points closer than this (chordally) are identified.
pub const RECURRENCE_TOLERANCE: f64 = 1e-7;

const WEIGHT_CAP: u64 = 1 << 20;

/// Orbifold weight of a postcritical point; `Infinite` when the weight
/// grows without bound (a critical point inside a cycle).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Weight {
    Finite(u64),
    Infinite,
}

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Weight::Finite(n) => s.serialize_u64(*n),
            Weight::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Weight::Finite(n)),
            Raw::S(s) if s == "inf" => Ok(Weight::Infinite),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad weight {s}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalOrbit {
    pub point: SpherePoint,
    pub local_degree: usize,
    /// `c, f(c), f^2(c), ...` up to the first recurrence or the depth cap.
    pub orbit: Vec<SpherePoint>,
    /// Index of the first orbit point on the cycle, when the orbit closes.
    pub preperiod: Option<usize>,
    pub period: Option<usize>,
    /// The orbit was attracted to (rather than landed on) a cycle.
    pub attracted: bool,
}

impl CriticalOrbit {
    pub fn is_finite(&self) -> bool {
        self.period.is_some() && !self.attracted
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostcriticalPoint {
    pub point: SpherePoint,
    pub weight: Weight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostcriticalAnalysis {
    pub critical: Vec<CriticalOrbit>,
    pub finite: bool,
    pub postcritical_set: Vec<PostcriticalPoint>,
    /// Sorted orbifold weights, when the map is postcritically finite.
    pub orbifold_signature: Option<Vec<Weight>>,
}

fn close(p: &SpherePoint, q: &SpherePoint) -> bool {
    p.chordal_distance(q) < RECURRENCE_TOLERANCE
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn lcm(a: Weight, b: Weight) -> Weight {
    match (a, b) {
        (Weight::Finite(x), Weight::Finite(y)) => {
            let l = x / gcd(x, y) * y;
            if l > WEIGHT_CAP { Weight::Infinite } else { Weight::Finite(l) }
        }
        _ => Weight::Infinite,
    }
}

fn times(a: Weight, k: usize) -> Weight {
    match a {
        Weight::Finite(x) => {
            let v = x * k as u64;
            if v > WEIGHT_CAP { Weight::Infinite } else { Weight::Finite(v) }
        }
        Weight::Infinite => Weight::Infinite,
    }
}

/// Distinct critical points with their local degrees.
pub fn distinct_critical_points(f: &RationalMap) -> Vec<(SpherePoint, usize)> {
    let mut out: Vec<(SpherePoint, usize)> = Vec::new();
    for c in f.critical_points().unwrap_or_default() {
        match out.iter_mut().find(|(p, _)| p.chordal_distance(&c) < 1e-6) {
            Some(entry) => entry.1 += 1,
            None => out.push((c, 2)),
        }
    }
    out
}

fn follow(f: &RationalMap, c: SpherePoint, local_degree: usize, depth: usize) -> CriticalOrbit {
    let mut orbit = vec![c];
    let mut cur = c;
    for _ in 0..depth {
        cur = f.eval(cur);
        if let Some(i) = orbit.iter().position(|q| close(q, &cur)) {
            let cycle = &orbit[i..];
            let lam = cycle_multiplier(f, cycle);
            // an orbit that creeps onto a non-repelling cycle has been
            // attracted to it, not mapped onto it
            let attracted = i > 0 && lam.norm() <= 1.0 + 1e-6 && cycle.iter().any(|q| orbit[i - 1].chordal_distance(q) < 1e-3);
            return CriticalOrbit { point: c, local_degree, preperiod: Some(i), period: Some(orbit.len() - i), orbit, attracted };
        }
        orbit.push(cur);
    }
    CriticalOrbit { point: c, local_degree, orbit, preperiod: None, period: None, attracted: false }
}

/// Critical orbits, the postcritical set and its orbifold weights.
pub fn postcritical_analysis(f: &RationalMap, depth: usize) -> PostcriticalAnalysis {
    let critical: Vec<CriticalOrbit> =
        distinct_critical_points(f).into_iter().map(|(c, k)| follow(f, c, k, depth)).collect();
    let finite = critical.iter().all(CriticalOrbit::is_finite);
    let mut points: Vec<SpherePoint> = Vec::new();
    for o in &critical {
        // f(c), f^2(c), ... together with the cycle the orbit closes on
        let start = o.preperiod.unwrap_or(1).min(1);
        for q in &o.orbit[start..] {
            if !points.iter().any(|p| close(p, q)) {
                points.push(*q);
            }
        }
    }
    points.sort_by(|a, b| {
        let (ka, kb) = (a.lex_key(), b.lex_key());
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    if !finite {
        let postcritical_set = points.into_iter().map(|point| PostcriticalPoint { point, weight: Weight::Infinite }).collect();
        return PostcriticalAnalysis { critical, finite, postcritical_set, orbifold_signature: None };
    }
    // ν(p) = lcm over preimages q of deg_q(f) ν(q), iterated to a fixed point
    let local_degree = |q: &SpherePoint| critical.iter().find(|o| close(&o.point, q)).map_or(1, |o| o.local_degree);
    let mut candidates: Vec<SpherePoint> = critical.iter().map(|o| o.point).collect();
    for p in &points {
        if !candidates.iter().any(|q| close(q, p)) {
            candidates.push(*p);
        }
    }
    let images: Vec<SpherePoint> = candidates.iter().map(|q| f.eval(*q)).collect();
    let mut weights = vec![Weight::Finite(1); points.len()];
    let index_of = |q: &SpherePoint| points.iter().position(|p| close(p, q));
    for _ in 0..4 * points.len() + 8 {
        let mut next = vec![Weight::Finite(1); points.len()];
        for (q, img) in candidates.iter().zip(&images) {
            if let Some(j) = index_of(img) {
                let wq = index_of(q).map_or(Weight::Finite(1), |i| weights[i]);
                next[j] = lcm(next[j], times(wq, local_degree(q)));
            }
        }
        if next == weights {
            break;
        }
        weights = next;
    }
    let mut signature: Vec<Weight> = weights.iter().copied().filter(|w| *w != Weight::Finite(1)).collect();
    signature.sort();
    let postcritical_set = points.into_iter().zip(weights).map(|(point, weight)| PostcriticalPoint { point, weight }).collect();
    PostcriticalAnalysis { critical, finite, postcritical_set, orbifold_signature: Some(signature) }
}

const LATTES_SIGNATURES: [&[u64]; 4] = [&[2, 2, 2, 2], &[2, 4, 4], &[3, 3, 3], &[2, 3, 6]];

/// Recognizes power maps, Chebyshev maps and Lattès maps up to conjugacy
/// from their critical orbits.
pub fn detect_exceptional(f: &RationalMap) -> Exceptional {
    detect_from_analysis(f, &postcritical_analysis(f, DEFAULT_DEPTH))
}

pub fn detect_from_analysis(f: &RationalMap, a: &PostcriticalAnalysis) -> Exceptional {
    if !a.finite {
        return Exceptional::None;
    }
    let d = f.degree();
    let total: Vec<&CriticalOrbit> = a.critical.iter().filter(|o| o.local_degree == d).collect();
    let in_set = |set: &[SpherePoint], q: &SpherePoint| set.iter().any(|p| close(p, q));

    let total_points: Vec<SpherePoint> = total.iter().map(|o| o.point).collect();
    if total_points.len() == 2 && total_points.iter().all(|p| in_set(&total_points, &f.eval(*p))) {
        return Exceptional::Power;
    }

    let periodic_total: Vec<&&CriticalOrbit> =
        total.iter().filter(|o| o.preperiod == Some(0) && o.period.is_some_and(|n| n <= 2)).collect();
    if periodic_total.len() == 1 {
        let t = periodic_total[0];
        let rest: Vec<SpherePoint> =
            a.postcritical_set.iter().map(|p| p.point).filter(|p| !t.orbit.iter().any(|q| close(p, q))).collect();
        if rest.len() == 2 && rest.iter().all(|p| in_set(&rest, &f.eval(*p))) {
            return Exceptional::Chebyshev;
        }
    }

    let any_periodic_total = total.iter().any(|o| o.preperiod == Some(0));
    let critical_in_cycle = a.critical.iter().any(|o| o.preperiod == Some(0));
    if !any_periodic_total && !critical_in_cycle {
        if let Some(sig) = &a.orbifold_signature {
            let finite: Option<Vec<u64>> =
                sig.iter().map(|w| if let Weight::Finite(n) = w { Some(*n) } else { None }).collect();
            if finite.is_some_and(|s| LATTES_SIGNATURES.contains(&s.as_slice())) {
                return Exceptional::Lattes;
            }
        }
    }
    Exceptional::None
}
