use std::fmt;

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

/// One of the two standard affine charts of the sphere: `z` near the origin,
/// `1/z` near infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Chart {
    Origin,
    Infinity,
}

impl Chart {
    /// The chart in which `p` has coordinate of modulus at most one.
    pub fn of(p: SpherePoint) -> Chart {
        match p {
            SpherePoint::Finite(z) if z.norm() <= 1.0 => Chart::Origin,
            _ => Chart::Infinity,
        }
    }
}

impl SpherePoint {
    pub fn new(re: f64, im: f64) -> Self {
        SpherePoint::Finite(Complex64::new(re, im))
    }

    pub fn real(x: f64) -> Self {
        Self::new(x, 0.0)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match *self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    /// Coordinate of the point in `chart`. Infinite when the point is the
    /// chart's missing pole.
    pub fn coord(&self, chart: Chart) -> Complex64 {
        match (chart, *self) {
            (Chart::Origin, SpherePoint::Finite(z)) => z,
            (Chart::Origin, SpherePoint::Infinity) => Complex64::new(f64::INFINITY, 0.0),
            (Chart::Infinity, SpherePoint::Infinity) => Complex64::new(0.0, 0.0),
            (Chart::Infinity, SpherePoint::Finite(z)) => {
                if z == Complex64::new(0.0, 0.0) {
                    Complex64::new(f64::INFINITY, 0.0)
                } else {
                    z.inv()
                }
            }
        }
    }

    pub fn from_coord(u: Complex64, chart: Chart) -> Self {
        match chart {
            Chart::Origin => Self::from_complex(u),
            Chart::Infinity => {
                if u == Complex64::new(0.0, 0.0) {
                    SpherePoint::Infinity
                } else {
                    Self::from_complex(u.inv())
                }
            }
        }
    }

    /// Non-finite input is mapped to infinity.
    pub fn from_complex(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            SpherePoint::Finite(z)
        } else {
            SpherePoint::Infinity
        }
    }

    /// Unit-norm homogeneous coordinates `(X, Y)` with `z = X / Y`.
    pub fn homogeneous(&self) -> (Complex64, Complex64) {
        match *self {
            SpherePoint::Infinity => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            SpherePoint::Finite(z) => {
                let r = z.norm();
                if r <= 1.0 {
                    let s = (1.0 + r * r).sqrt();
                    (z / s, Complex64::new(1.0 / s, 0.0))
                } else {
                    let w = z.inv();
                    let s = (1.0 + w.norm_sqr()).sqrt();
                    (Complex64::new(1.0 / s, 0.0), w / s)
                }
            }
        }
    }

    /// Chordal distance, bounded by 2.
    pub fn chordal_distance(&self, other: &SpherePoint) -> f64 {
        let (x1, y1) = self.homogeneous();
        let (x2, y2) = other.homogeneous();
        2.0 * (x1 * y2 - x2 * y1).norm()
    }

    /// Point on the unit sphere of R^3 under inverse stereographic projection.
    pub fn to_unit_vector(&self) -> [f64; 3] {
        match *self {
            SpherePoint::Infinity => [0.0, 0.0, 1.0],
            SpherePoint::Finite(z) => {
                let r2 = z.norm_sqr();
                let s = 1.0 + r2;
                [2.0 * z.re / s, 2.0 * z.im / s, (r2 - 1.0) / s]
            }
        }
    }

    pub fn from_unit_vector(v: [f64; 3]) -> Self {
        if v[2] >= 1.0 {
            return SpherePoint::Infinity;
        }
        let s = 1.0 - v[2];
        Self::from_complex(Complex64::new(v[0] / s, v[1] / s))
    }

    /// Lexicographic key `(re, im)` with infinity last.
    pub fn lex_key(&self) -> (f64, f64) {
        match *self {
            SpherePoint::Finite(z) => (z.re, z.im),
            SpherePoint::Infinity => (f64::INFINITY, f64::INFINITY),
        }
    }

    /// Distance to the extended real line: `|Im z|` near the origin and
    /// `|Im(1/z)|` near infinity.
    pub fn distance_to_real_line(&self) -> f64 {
        let chart = Chart::of(*self);
        self.coord(chart).im.abs()
    }

    /// Real value when the point sits on the extended real line within
    /// `tol`; `None` for infinity or off-axis points.
    pub fn as_real(&self, tol: f64) -> Option<f64> {
        match *self {
            SpherePoint::Finite(z) if z.im.abs() <= tol * z.re.abs().max(1.0) => Some(z.re),
            _ => None,
        }
    }
}

impl From<Complex64> for SpherePoint {
    fn from(z: Complex64) -> Self {
        Self::from_complex(z)
    }
}

impl From<f64> for SpherePoint {
    fn from(x: f64) -> Self {
        Self::real(x)
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpherePoint::Infinity => write!(f, "inf"),
            SpherePoint::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
        }
    }
}

// JSON form: `[re, im]` for finite points, the string "inf" for infinity.
impl Serialize for SpherePoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SpherePoint::Infinity => s.serialize_str("inf"),
            SpherePoint::Finite(z) => [z.re, z.im].serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for SpherePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pair([f64; 2]),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Pair([re, im]) => Ok(SpherePoint::new(re, im)),
            Repr::Text(t) if t == "inf" || t == "infinity" => Ok(SpherePoint::Infinity),
            Repr::Text(t) => Err(de::Error::custom(format!("expected [re, im] or \"inf\", got {t:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chordal_distance_handles_infinity() {
        let a = SpherePoint::real(1e9);
        assert!(a.chordal_distance(&SpherePoint::Infinity) < 1e-8);
        let zero = SpherePoint::real(0.0);
        assert!((zero.chordal_distance(&SpherePoint::Infinity) - 2.0).abs() < 1e-15);
        assert!((zero.chordal_distance(&SpherePoint::real(1.0)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn charts_round_trip() {
        let p = SpherePoint::new(3.0, -4.0);
        let chart = Chart::of(p);
        assert_eq!(chart, Chart::Infinity);
        let back = SpherePoint::from_coord(p.coord(chart), chart);
        assert!(back.chordal_distance(&p) < 1e-15);
        assert_eq!(SpherePoint::from_coord(Complex64::new(0.0, 0.0), Chart::Infinity), SpherePoint::Infinity);
    }

    #[test]
    fn json_form() {
        let s = serde_json::to_string(&vec![SpherePoint::new(1.5, -2.0), SpherePoint::Infinity]).unwrap();
        assert_eq!(s, r#"[[1.5,-2.0],"inf"]"#);
        let back: Vec<SpherePoint> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[1], SpherePoint::Infinity);
    }

    #[test]
    fn unit_vector_round_trip() {
        let p = SpherePoint::new(0.3, 2.0);
        let q = SpherePoint::from_unit_vector(p.to_unit_vector());
        assert!(p.chordal_distance(&q) < 1e-14);
    }
}
