use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AlgebraError, Chart, Moebius, Poly, SpherePoint};
use crate::roots;

/// Default cap on the degree of composed maps.
pub const DEFAULT_DEGREE_CAP: usize = 4096;

/// Roots of numerator and denominator closer than this are treated as a
/// common factor and divided out.
pub const COPRIMALITY_TOLERANCE: f64 = 1e-8;

/// A rational map `num / den` of the Riemann sphere.
///
/// Both polynomials are read as homogeneous forms of degree
/// `d = max(deg num, deg den)`, which is how points at infinity and poles
/// are evaluated: in whichever affine chart keeps the coordinates bounded.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap {
    num: Poly,
    den: Poly,
    degree: usize,
    // z^d num(1/z), z^d den(1/z): the map read in the chart at infinity
    num_rev: Poly,
    den_rev: Poly,
}

/// Values of the homogeneous pair `(A, B)` and their derivatives with
/// respect to the chart coordinate.
#[derive(Clone, Copy, Debug)]
pub struct HomogeneousValue {
    pub a: Complex64,
    pub b: Complex64,
    pub da: Complex64,
    pub db: Complex64,
}

impl HomogeneousValue {
    /// Image coordinate in the chart that keeps it bounded.
    pub fn image(&self) -> (Complex64, Chart) {
        if self.a.norm() <= self.b.norm() {
            (self.a / self.b, Chart::Origin)
        } else {
            (self.b / self.a, Chart::Infinity)
        }
    }

    /// Derivative of the image coordinate in `target` with respect to the
    /// source chart coordinate.
    pub fn image_derivative(&self, target: Chart) -> Complex64 {
        match target {
            Chart::Origin => (self.da * self.b - self.a * self.db) / (self.b * self.b),
            Chart::Infinity => (self.db * self.a - self.b * self.da) / (self.a * self.a),
        }
    }
}

impl RationalMap {
    /// Validates and reduces `num / den` to coprime form.
    pub fn new(num: Poly, den: Poly) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        Ok(Self::from_parts_unchecked(num, den).reduced())
    }

    /// Builds the map without the coprimality pass. Callers guarantee the
    /// pair is already reduced (composition and conjugation preserve it).
    pub fn from_parts_unchecked(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let degree = num.degree().max(den.degree());
        let num_rev = num.reversed(degree);
        let den_rev = den.reversed(degree);
        Self { num, den, degree, num_rev, den_rev }
    }

    pub fn polynomial(p: Poly) -> Self {
        Self::from_parts_unchecked(p, Poly::one())
    }

    pub fn identity() -> Self {
        Self::polynomial(Poly::identity())
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == 0
    }

    /// Whether all coefficients are real up to a common complex factor.
    pub fn is_real(&self, tol: f64) -> bool {
        let n = self.normalized();
        n.num.is_real(tol) && n.den.is_real(tol)
    }

    /// Divides numerator and denominator by their largest coefficient so the
    /// representation is scale- and phase-normalized.
    pub fn normalized(&self) -> Self {
        let pivot = self
            .num
            .coeffs()
            .iter()
            .chain(self.den.coeffs())
            .copied()
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        let s = pivot.inv();
        Self::from_parts_unchecked(self.num.scale(s), self.den.scale(s))
    }

    /// Drops imaginary parts of a map already known to be real.
    pub fn real_part(&self) -> Self {
        let re = |p: &Poly| Poly::new(p.coeffs().iter().map(|c| Complex64::new(c.re, 0.0)).collect());
        Self::from_parts_unchecked(re(&self.num), re(&self.den))
    }

    /// Divides out common roots of numerator and denominator.
    pub fn reduced(self) -> Self {
        if self.num.degree() == 0 || self.den.degree() == 0 {
            return self;
        }
        let (Ok(nr), Ok(dr)) = (
            roots::all_roots(&self.num, roots::DEFAULT_TOLERANCE),
            roots::all_roots(&self.den, roots::DEFAULT_TOLERANCE),
        ) else {
            return self;
        };
        let mut used = vec![false; dr.roots.len()];
        let mut common = Vec::new();
        for &r in &nr.roots {
            let best = dr
                .roots
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, s)| (j, (r - s).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((j, dist)) = best {
                if dist < COPRIMALITY_TOLERANCE * r.norm().max(1.0) {
                    used[j] = true;
                    common.push(0.5 * (r + dr.roots[j]));
                }
            }
        }
        if common.is_empty() {
            return self;
        }
        let (mut num, mut den) = (self.num, self.den);
        for r in common {
            num = num.deflate(r);
            den = den.deflate(r);
        }
        Self::from_parts_unchecked(num, den)
    }

    /// `(A, B)` and derivatives at chart coordinate `u`.
    pub fn homogeneous_at(&self, u: Complex64, chart: Chart) -> HomogeneousValue {
        match chart {
            Chart::Origin => {
                let (a, da) = self.num.eval_with_derivative(u);
                let (b, db) = self.den.eval_with_derivative(u);
                HomogeneousValue { a, b, da, db }
            }
            Chart::Infinity => {
                let (a, da) = self.num_rev.eval_with_derivative(u);
                let (b, db) = self.den_rev.eval_with_derivative(u);
                HomogeneousValue { a, b, da, db }
            }
        }
    }

    /// Image of a point given by its chart coordinate, returned in the
    /// chart that keeps it bounded.
    pub fn eval_in_chart(&self, u: Complex64, chart: Chart) -> (Complex64, Chart) {
        let (a, b) = match chart {
            Chart::Origin => (self.num.eval(u), self.den.eval(u)),
            Chart::Infinity => (self.num_rev.eval(u), self.den_rev.eval(u)),
        };
        if a.norm() <= b.norm() {
            (a / b, Chart::Origin)
        } else {
            (b / a, Chart::Infinity)
        }
    }

    pub fn eval(&self, p: SpherePoint) -> SpherePoint {
        let chart = Chart::of(p);
        let (v, out) = self.eval_in_chart(p.coord(chart), chart);
        SpherePoint::from_coord(v, out)
    }

    pub fn eval_complex(&self, z: Complex64) -> SpherePoint {
        self.eval(SpherePoint::Finite(z))
    }

    /// `n`-th iterate of a point.
    pub fn iterate(&self, p: SpherePoint, n: usize) -> SpherePoint {
        (0..n).fold(p, |q, _| self.eval(q))
    }

    /// Derivative at `p` read from the chart of `p` into `target`.
    pub fn chart_derivative(&self, p: SpherePoint, target: Chart) -> Complex64 {
        let chart = Chart::of(p);
        self.homogeneous_at(p.coord(chart), chart).image_derivative(target)
    }

    /// Ordinary derivative `f'(z)` at a finite point that is not a pole.
    pub fn derivative_at(&self, z: Complex64) -> Complex64 {
        let h = self.homogeneous_at(z, Chart::Origin);
        h.image_derivative(Chart::Origin)
    }

    /// Spherical derivative `|f'(z)| (1 + |z|^2) / (1 + |f(z)|^2)`,
    /// evaluated in bounded charts so it is finite everywhere.
    pub fn spherical_derivative(&self, p: SpherePoint) -> f64 {
        let chart = Chart::of(p);
        let u = p.coord(chart);
        let h = self.homogeneous_at(u, chart);
        let (v, out) = h.image();
        h.image_derivative(out).norm() * (1.0 + u.norm_sqr()) / (1.0 + v.norm_sqr())
    }

    /// The derivative `f'` as a rational function, in reduced form.
    pub fn derivative(&self) -> RationalMap {
        let w = self.wronskian();
        if w.is_zero() {
            return Self::from_parts_unchecked(Poly::zero(), Poly::one());
        }
        let den2 = &self.den * &self.den;
        Self::from_parts_unchecked(w, den2).reduced()
    }

    /// `num' den - num den'`.
    pub fn wronskian(&self) -> Poly {
        &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative())
    }

    /// `self ∘ inner`, evaluated on homogeneous forms so the result stays
    /// coprime with degree `deg self * deg inner`.
    pub fn compose_with_cap(&self, inner: &RationalMap, cap: usize) -> Result<RationalMap, AlgebraError> {
        let degree = self.degree * inner.degree;
        if degree > cap {
            return Err(AlgebraError::DegreeCapExceeded { degree, cap });
        }
        let g1 = &inner.num;
        let g2 = &inner.den;
        let d = self.degree;
        let pow1: Vec<Poly> = (0..=d).scan(Poly::one(), |acc, k| {
            let cur = acc.clone();
            if k < d {
                *acc = &*acc * g1;
            }
            Some(cur)
        }).collect();
        let pow2: Vec<Poly> = (0..=d).scan(Poly::one(), |acc, k| {
            let cur = acc.clone();
            if k < d {
                *acc = &*acc * g2;
            }
            Some(cur)
        }).collect();
        let form = |p: &Poly| {
            (0..=d).fold(Poly::zero(), |acc, j| {
                let c = p.coeff(j);
                if c == Complex64::new(0.0, 0.0) {
                    acc
                } else {
                    &acc + &(&pow1[j] * &pow2[d - j]).scale(c)
                }
            })
        };
        Ok(Self::from_parts_unchecked(form(&self.num), form(&self.den)).normalized())
    }

    pub fn compose(&self, inner: &RationalMap) -> Result<RationalMap, AlgebraError> {
        self.compose_with_cap(inner, DEFAULT_DEGREE_CAP)
    }

    /// `m ∘ f ∘ m⁻¹`.
    pub fn conjugate(&self, m: &Moebius) -> RationalMap {
        let inner = m.inverse().as_rational_map();
        let right = self
            .compose_with_cap(&inner, usize::MAX)
            .expect("composition with a Moebius map keeps the degree");
        m.as_rational_map()
            .compose_with_cap(&right, usize::MAX)
            .expect("composition with a Moebius map keeps the degree")
    }

    /// The `2d - 2` critical points with multiplicity: roots of the
    /// Wronskian plus infinity for the missing degree.
    pub fn critical_points(&self) -> Result<Vec<SpherePoint>, AlgebraError> {
        let expected = (2 * self.degree).saturating_sub(2);
        let w = self.wronskian();
        let mut out = Vec::with_capacity(expected);
        if !w.is_zero() && w.degree() > 0 {
            let rs = roots::all_roots(&w, roots::DEFAULT_TOLERANCE).map_err(|_| AlgebraError::RootFindingFailed)?;
            out.extend(rs.roots.into_iter().map(SpherePoint::Finite));
        }
        let finite = out.len();
        out.extend(std::iter::repeat_n(SpherePoint::Infinity, expected.saturating_sub(finite)));
        Ok(out)
    }

    /// All `d` preimages of `w`, with multiplicity.
    pub fn preimages(&self, w: SpherePoint) -> Result<Vec<SpherePoint>, AlgebraError> {
        let eq = match Chart::of(w) {
            Chart::Origin => {
                let z = w.coord(Chart::Origin);
                &self.num - &self.den.scale(z)
            }
            Chart::Infinity => {
                let v = w.coord(Chart::Infinity);
                &self.num.scale(v) - &self.den
            }
        };
        let mut out = Vec::with_capacity(self.degree);
        if eq.degree() > 0 {
            let rs = roots::all_roots(&eq, roots::DEFAULT_TOLERANCE).map_err(|_| AlgebraError::RootFindingFailed)?;
            out.extend(rs.roots.into_iter().map(SpherePoint::Finite));
        }
        let finite = out.len();
        out.extend(std::iter::repeat_n(SpherePoint::Infinity, self.degree.saturating_sub(finite)));
        Ok(out)
    }

    /// For an odd map `B`, the map `f` with `f(w^2) = B(w)^2`.
    pub fn even_part_lift(&self) -> Result<RationalMap, AlgebraError> {
        const TOL: f64 = 1e-12;
        let parity = |p: &Poly| -> Option<usize> {
            let scale = p.max_abs_coeff();
            let mut seen = None;
            for (k, c) in p.coeffs().iter().enumerate() {
                if c.norm() > TOL * scale {
                    match seen {
                        None => seen = Some(k % 2),
                        Some(s) if s != k % 2 => return None,
                        _ => {}
                    }
                }
            }
            seen
        };
        match (parity(&self.num), parity(&self.den)) {
            (Some(a), Some(b)) if a != b => {}
            _ => return Err(AlgebraError::NotOdd),
        }
        let even_half = |p: &Poly| {
            let sq = p * p;
            Poly::new(sq.coeffs().iter().step_by(2).copied().collect())
        };
        Ok(Self::from_parts_unchecked(even_half(&self.num), even_half(&self.den)))
    }

    /// Expression in the map grammar, when all coefficients are real.
    pub fn to_expression(&self) -> Option<String> {
        if !(self.num.is_real(0.0) && self.den.is_real(0.0)) {
            return None;
        }
        let render = |p: &Poly| -> String {
            let mut s = String::new();
            for (k, c) in p.coeffs().iter().enumerate() {
                let x = c.re;
                if x == 0.0 && p.degree() > 0 {
                    continue;
                }
                let mag = format!("{}", x.abs());
                let term = match k {
                    0 => mag,
                    1 => format!("{mag}*z"),
                    _ => format!("{mag}*z^{k}"),
                };
                if s.is_empty() {
                    if x < 0.0 {
                        s.push('-');
                    }
                } else {
                    s.push_str(if x < 0.0 { " - " } else { " + " });
                }
                s.push_str(&term);
            }
            if s.is_empty() {
                s.push('0');
            }
            s
        };
        Some(format!("({})/({})", render(&self.num), render(&self.den)))
    }

    /// Coefficient-file form.
    pub fn to_coefficients(&self) -> CoefficientFile {
        let pairs = |p: &Poly| p.coeffs().iter().map(|c| [c.re, c.im]).collect();
        CoefficientFile { num: pairs(&self.num), den: pairs(&self.den) }
    }

    pub fn from_coefficients(file: &CoefficientFile) -> Result<Self, AlgebraError> {
        let poly = |v: &[[f64; 2]]| Poly::new(v.iter().map(|p| Complex64::new(p[0], p[1])).collect());
        if file.num.is_empty() || file.den.is_empty() {
            return Err(AlgebraError::ZeroDenominator);
        }
        Self::new(poly(&file.num), poly(&file.den))
    }
}

/// JSON coefficient file: ascending `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub num: Vec<[f64; 2]>,
    pub den: Vec<[f64; 2]>,
}

impl fmt::Display for RationalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_expression() {
            Some(s) => write!(f, "{s}"),
            None => write!(f, "({})/({})", self.num, self.den),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn example1(cc: f64) -> RationalMap {
        RationalMap::new(Poly::from_real(&[-4.0, 0.0, 1.0]), Poly::from_real(&[1.0, cc])).unwrap()
    }

    #[test]
    fn eval_monomial_and_infinity() {
        let sq = RationalMap::polynomial(Poly::from_real(&[0.0, 0.0, 1.0]));
        assert_eq!(sq.eval(SpherePoint::real(3.0)), SpherePoint::real(9.0));
        let f = example1(0.25);
        assert_eq!(f.eval(SpherePoint::Infinity), SpherePoint::Infinity);
        assert_eq!(f.eval(SpherePoint::real(-4.0)), SpherePoint::Infinity);
    }

    #[test]
    fn derivative_quotient_rule() {
        let f = example1(0.25);
        let df = f.derivative();
        // (c z^2 + 2z + 4c) / (1 + c z)^2
        let expect_num = Poly::from_real(&[1.0, 2.0, 0.25]);
        let expect_den = Poly::from_real(&[1.0, 0.5, 0.0625]);
        let z = c(0.7);
        let lhs = df.eval_complex(z).finite().unwrap();
        let rhs = expect_num.eval(z) / expect_den.eval(z);
        assert!((lhs - rhs).norm() < 1e-13);
        assert!((f.derivative_at(z) - rhs).norm() < 1e-13);
        let constant = RationalMap::polynomial(Poly::from_real(&[3.0]));
        assert!(constant.derivative().num().is_zero());
    }

    #[test]
    fn compose_degree_and_cap() {
        let t2 = RationalMap::polynomial(Poly::from_real(&[-1.0, 0.0, 2.0]));
        let t4 = t2.compose(&t2).unwrap();
        assert_eq!(t4.degree(), 4);
        let z = c(0.37);
        let expect = Poly::from_real(&[1.0, 0.0, -8.0, 0.0, 8.0]).eval(z);
        assert!((t4.eval_complex(z).finite().unwrap() - expect).norm() < 1e-13);
        let cubic = RationalMap::polynomial(Poly::from_real(&[0.0, 1.0, 0.0, 1.0]));
        assert!(matches!(
            cubic.compose_with_cap(&cubic, 8),
            Err(AlgebraError::DegreeCapExceeded { degree: 9, cap: 8 })
        ));
    }

    #[test]
    fn critical_points_of_example1() {
        let f = example1(0.25);
        let mut cps = f.critical_points().unwrap();
        assert_eq!(cps.len(), 2);
        cps.sort_by(|a, b| a.lex_key().0.total_cmp(&b.lex_key().0));
        // roots of 0.25 z^2 + 2 z + 1
        let r1 = (-2.0 - 3f64.sqrt()) / 0.5;
        let r2 = (-2.0 + 3f64.sqrt()) / 0.5;
        assert!(cps[0].chordal_distance(&SpherePoint::real(r1)) < 1e-12);
        assert!(cps[1].chordal_distance(&SpherePoint::real(r2)) < 1e-12);
        let sq = RationalMap::polynomial(Poly::from_real(&[1.0, 0.0, 1.0]));
        let cps = sq.critical_points().unwrap();
        assert!(cps.contains(&SpherePoint::Infinity));
        assert!(cps.iter().any(|p| p.chordal_distance(&SpherePoint::real(0.0)) < 1e-14));
    }

    #[test]
    fn reduction_removes_common_factor() {
        let f = RationalMap::new(Poly::from_real(&[-1.0, 0.0, 1.0]), Poly::from_real(&[-1.0, 1.0])).unwrap();
        assert_eq!(f.degree(), 1);
        assert!(f.den().degree() == 0);
    }

    #[test]
    fn spherical_derivative_is_chart_independent() {
        let f = example1(0.25);
        // at infinity the multiplier is c; the spherical derivative there is |c|
        assert!((f.spherical_derivative(SpherePoint::Infinity) - 0.25).abs() < 1e-14);
        let sq = RationalMap::polynomial(Poly::from_real(&[0.0, 0.0, 1.0]));
        let p = SpherePoint::Finite(Complex64::from_polar(1.0, 0.3));
        assert!((sq.spherical_derivative(p) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lift_of_odd_maps() {
        let cube = RationalMap::polynomial(Poly::from_real(&[0.0, 0.0, 0.0, 1.0]));
        let lift = cube.even_part_lift().unwrap();
        assert_eq!(lift.num(), &Poly::from_real(&[0.0, 0.0, 0.0, 1.0]));
        let not_odd = RationalMap::polynomial(Poly::from_real(&[1.0, 0.0, 1.0]));
        assert!(matches!(not_odd.even_part_lift(), Err(AlgebraError::NotOdd)));
    }
}
