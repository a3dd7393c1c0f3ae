use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AlgebraError, Poly, RationalMap, SpherePoint};

/// `|ad - bc|` must exceed this (after scaling to unit max entry).
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// Fractional-linear map `z -> (a z + b) / (c z + d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moebius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl Moebius {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self, AlgebraError> {
        let scale = [a, b, c, d].iter().fold(0.0_f64, |m, x| m.max(x.norm()));
        if scale == 0.0 || !scale.is_finite() {
            return Err(AlgebraError::DegenerateMoebius);
        }
        let (a, b, c, d) = (a / scale, b / scale, c / scale, d / scale);
        if (a * d - b * c).norm() <= DEGENERACY_TOLERANCE {
            return Err(AlgebraError::DegenerateMoebius);
        }
        Ok(Self { a, b, c, d })
    }

    pub fn identity() -> Self {
        Self { a: one(), b: zero(), c: zero(), d: one() }
    }

    /// `z -> 1/z`.
    pub fn inversion() -> Self {
        Self { a: zero(), b: one(), c: one(), d: zero() }
    }

    pub fn translation(t: Complex64) -> Self {
        Self { a: one(), b: t, c: zero(), d: one() }
    }

    /// `z -> s z`.
    pub fn scaling(s: Complex64) -> Self {
        Self { a: s, b: zero(), c: zero(), d: one() }
    }

    /// The unique map sending `p1, p2, p3` to `0, 1, infinity`.
    pub fn to_zero_one_infinity(p1: SpherePoint, p2: SpherePoint, p3: SpherePoint) -> Result<Self, AlgebraError> {
        use SpherePoint::{Finite, Infinity};
        match (p1, p2, p3) {
            (Finite(z1), Finite(z2), Finite(z3)) => {
                // (z - z1)(z2 - z3) / ((z - z3)(z2 - z1))
                let k = z2 - z3;
                let l = z2 - z1;
                Self::new(k, -z1 * k, l, -z3 * l)
            }
            (Infinity, Finite(z2), Finite(z3)) => Self::new(zero(), z2 - z3, one(), -z3),
            (Finite(z1), Infinity, Finite(z3)) => Self::new(one(), -z1, one(), -z3),
            (Finite(z1), Finite(z2), Infinity) => Self::new(one(), -z1, zero(), z2 - z1),
            _ => Err(AlgebraError::DegenerateMoebius),
        }
    }

    pub fn apply(&self, p: SpherePoint) -> SpherePoint {
        match p {
            SpherePoint::Infinity => {
                if self.c == zero() {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::from_complex(self.a / self.c)
                }
            }
            SpherePoint::Finite(z) => {
                let num = self.a * z + self.b;
                let den = self.c * z + self.d;
                if den == zero() {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::from_complex(num / den)
                }
            }
        }
    }

    pub fn apply_complex(&self, z: Complex64) -> SpherePoint {
        self.apply(SpherePoint::Finite(z))
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Moebius) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
        .rescaled()
    }

    fn rescaled(self) -> Self {
        let s = [self.a, self.b, self.c, self.d].iter().fold(0.0_f64, |m, x| m.max(x.norm()));
        Self { a: self.a / s, b: self.b / s, c: self.c / s, d: self.d / s }
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Derivative at a finite point that is not the pole.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        self.determinant() / (den * den)
    }

    /// Whether the map sends the extended real line to itself (entries real
    /// up to a common complex factor).
    pub fn preserves_real_line(&self, tol: f64) -> bool {
        let entries = [self.a, self.b, self.c, self.d];
        let pivot = entries
            .iter()
            .copied()
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap_or_else(one);
        entries.iter().all(|e| (e / pivot).im.abs() <= tol)
    }

    pub fn as_rational_map(&self) -> RationalMap {
        RationalMap::from_parts_unchecked(Poly::new(vec![self.b, self.a]), Poly::new(vec![self.d, self.c]))
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let m = self.rescaled();
        let a = m.a;
        if a.norm() < 0.5 {
            return false;
        }
        (m.d - a).norm() <= tol * a.norm() && m.b.norm() <= tol * a.norm() && m.c.norm() <= tol * a.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points_to_standard_positions() {
        let p = [SpherePoint::new(1.0, 0.0), SpherePoint::new(0.0, 1.0), SpherePoint::new(-1.0, 0.0)];
        let m = Moebius::to_zero_one_infinity(p[0], p[1], p[2]).unwrap();
        assert!(m.apply(p[0]).chordal_distance(&SpherePoint::real(0.0)) < 1e-15);
        assert!(m.apply(p[1]).chordal_distance(&SpherePoint::real(1.0)) < 1e-15);
        assert_eq!(m.apply(p[2]), SpherePoint::Infinity);
        let inv = m.inverse();
        assert!(inv.apply(SpherePoint::Infinity).chordal_distance(&p[2]) < 1e-15);
    }

    #[test]
    fn degenerate_rejected() {
        let c = Complex64::new(1.0, 0.0);
        assert!(Moebius::new(c, c, c, c).is_err());
    }

    #[test]
    fn compose_matches_sequential_application() {
        let m1 = Moebius::new(
            Complex64::new(1.0, 2.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(3.0, -1.0),
        )
        .unwrap();
        let m2 = Moebius::inversion().compose(&Moebius::translation(Complex64::new(2.0, 0.0)));
        let z = SpherePoint::new(0.7, -0.3);
        let lhs = m1.compose(&m2).apply(z);
        let rhs = m1.apply(m2.apply(z));
        assert!(lhs.chordal_distance(&rhs) < 1e-14);
    }
}
