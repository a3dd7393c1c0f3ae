use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Coefficients at or below this fraction of the largest one are dropped
/// from the top when a polynomial is built.
pub const DROP_TOLERANCE: f64 = 1e-12;

/// Dense univariate polynomial with complex coefficients in ascending powers.
///
/// The coefficient vector is never empty; the zero polynomial is `[0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Builds a polynomial, trimming leading coefficients that fall below the
    /// relative drop tolerance.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        let cut = DROP_TOLERANCE * scale;
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() <= cut) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        if scale == 0.0 {
            coeffs.truncate(1);
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0)] }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// The polynomial `z`.
    pub fn identity() -> Self {
        Self::from_real(&[0.0, 1.0])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= r * c;
            }
            coeffs = next;
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == Complex64::new(0.0, 0.0)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    /// Coefficient of `z^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.max_abs_coeff().max(f64::MIN_POSITIVE);
        self.coeffs.iter().all(|c| c.im.abs() <= tol * scale)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative by a single Horner pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `sum |c_k| |z|^k`, the natural scale for backward-error estimates.
    pub fn eval_abs(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn integral(&self) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0)];
        out.extend(self.coeffs.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64));
        Self::new(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Coefficients of `z^d p(1/z)`; requires `d >= degree`.
    pub fn reversed(&self, d: usize) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); d + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            out[d - k] = c;
        }
        Self::new(out)
    }

    /// Taylor shift: the polynomial `q(w) = p(a + w)`.
    pub fn shifted(&self, a: Complex64) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let next = c[j + 1];
                c[j] += a * next;
            }
        }
        Self { coeffs: c }
    }

    /// Substitutes `z -> z^k`.
    pub fn substitute_power(&self, k: usize) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.degree() * k + 1];
        for (j, &c) in self.coeffs.iter().enumerate() {
            out[j * k] = c;
        }
        Self::new(out)
    }

    /// Polynomial long division; returns `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let n = self.degree();
        let m = divisor.degree();
        if n < m {
            return (Poly::zero(), self.clone());
        }
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Complex64::new(0.0, 0.0); n - m + 1];
        for k in (0..=n - m).rev() {
            let q = rem[k + m] / lead;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
        }
        rem.truncate(m.max(1));
        (Poly::new(quot), Poly::new(rem))
    }

    /// Divides out `(z - r)` by synthetic division, discarding the remainder.
    pub fn deflate(&self, r: Complex64) -> Poly {
        if self.degree() == 0 {
            return self.clone();
        }
        let n = self.degree();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..=n).rev() {
            acc = acc * r + self.coeffs[k];
            out[k - 1] = acc;
        }
        Poly::new(out)
    }

    /// Composition `self(inner(z))` by Horner's scheme.
    pub fn compose(&self, inner: &Poly) -> Poly {
        self.coeffs
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, &c| &(&acc * inner) + &Poly::constant(c))
    }

    /// Coefficient-wise maximum distance, after padding to equal length.
    pub fn distance(&self, other: &Poly) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == Complex64::new(0.0, 0.0) && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            match k {
                0 => {}
                1 => write!(f, "*z")?,
                _ => write!(f, "*z^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn trims_tiny_leading_coefficients() {
        let p = Poly::new(vec![c(1.0), c(2.0), c(1e-14)]);
        assert_eq!(p.degree(), 1);
        assert!(Poly::new(vec![c(0.0), c(0.0)]).is_zero());
    }

    #[test]
    fn arithmetic() {
        let p = Poly::from_real(&[-1.0, 0.0, 2.0]);
        let sq = &p * &p;
        assert_eq!(sq, Poly::from_real(&[1.0, 0.0, -4.0, 0.0, 4.0]));
        assert_eq!(p.compose(&p), Poly::from_real(&[1.0, 0.0, -8.0, 0.0, 8.0]));
        assert_eq!(p.derivative(), Poly::from_real(&[0.0, 4.0]));
        assert_eq!(p.pow(3), &sq * &p);
    }

    #[test]
    fn division_and_deflation() {
        let p = Poly::from_roots(&[c(1.0), c(2.0), c(-3.0)]);
        let q = p.deflate(c(2.0));
        assert!(q.distance(&Poly::from_roots(&[c(1.0), c(-3.0)])) < 1e-14);
        let (quot, rem) = p.div_rem(&Poly::from_roots(&[c(1.0)]));
        assert!(rem.max_abs_coeff() < 1e-14);
        assert!(quot.distance(&Poly::from_roots(&[c(2.0), c(-3.0)])) < 1e-14);
    }

    #[test]
    fn shift_matches_evaluation() {
        let p = Poly::from_real(&[3.0, -1.0, 0.5, 2.0]);
        let a = Complex64::new(0.3, -0.7);
        let s = p.shifted(a);
        let w = Complex64::new(-0.2, 0.4);
        assert!((s.eval(w) - p.eval(a + w)).norm() < 1e-13);
    }

    #[test]
    fn reversal() {
        let p = Poly::from_real(&[1.0, 2.0]);
        assert_eq!(p.reversed(3), Poly::from_real(&[0.0, 0.0, 2.0, 1.0]));
    }
}
