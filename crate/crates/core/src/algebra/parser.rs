//! Recursive-descent parser for map expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'? base ('^' uint)?
//! base   := 'z' | number | '(' expr ')'
//! ```
//!
//! The optional leading minus on a factor is an extension so that printed
//! maps with a negative leading coefficient parse back.

use num_complex::Complex64;

use super::{AlgebraError, Poly, RationalMap};

const MAX_EXPONENT: u64 = 4096;

/// Unreduced quotient produced while parsing.
#[derive(Clone)]
struct Quotient {
    num: Poly,
    den: Poly,
}

impl Quotient {
    fn poly(p: Poly) -> Self {
        Self { num: p, den: Poly::one() }
    }

    fn add(self, rhs: Quotient, sign: f64) -> Quotient {
        let left = &self.num * &rhs.den;
        let right = (&rhs.num * &self.den).scale(Complex64::new(sign, 0.0));
        Quotient { num: &left + &right, den: &self.den * &rhs.den }
    }

    fn mul(self, rhs: Quotient) -> Quotient {
        Quotient { num: &self.num * &rhs.num, den: &self.den * &rhs.den }
    }

    fn div(self, rhs: Quotient, offset: usize) -> Result<Quotient, AlgebraError> {
        if rhs.num.is_zero() {
            return Err(AlgebraError::DivisionByZeroPolynomial { offset });
        }
        Ok(Quotient { num: &self.num * &rhs.den, den: &self.den * &rhs.num })
    }

    fn pow(self, n: u32) -> Quotient {
        Quotient { num: self.num.pow(n), den: self.den.pow(n) }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn error(&self, message: impl Into<String>) -> AlgebraError {
        AlgebraError::Syntax { offset: self.pos, message: message.into() }
    }

    fn expr(&mut self) -> Result<Quotient, AlgebraError> {
        let mut acc = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = acc.add(rhs, if op == b'+' { 1.0 } else { -1.0 });
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Quotient, AlgebraError> {
        let mut acc = self.factor()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            let rhs = self.factor()?;
            acc = if op == b'*' { acc.mul(rhs) } else { acc.div(rhs, at)? };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Quotient, AlgebraError> {
        let negate = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let mut base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let n = self.uint()?;
            base = base.pow(n);
        }
        if negate {
            base.num = -&base.num;
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Quotient, AlgebraError> {
        match self.peek() {
            Some(b'z') => {
                self.pos += 1;
                Ok(Quotient::poly(Poly::identity()))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let x = self.number()?;
                Ok(Quotient::poly(Poly::constant(Complex64::new(x, 0.0))))
            }
            Some(c) => Err(self.error(format!("unexpected '{}'", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64, AlgebraError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos > s
        };
        let mut any = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            any |= digits(self);
        }
        if !any {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !digits(self) {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map_err(|_| AlgebraError::Syntax { offset: start, message: "malformed number".into() })
    }

    fn uint(&mut self) -> Result<u32, AlgebraError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a non-negative integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<u64>() {
            Ok(n) if n <= MAX_EXPONENT => Ok(n as u32),
            _ => Err(AlgebraError::Syntax { offset: start, message: format!("exponent exceeds {MAX_EXPONENT}") }),
        }
    }
}

/// Parses a map expression in the variable `z` into a reduced rational map.
pub fn parse_map(text: &str) -> Result<RationalMap, AlgebraError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let q = p.expr()?;
    if p.peek().is_some() {
        return Err(p.error("trailing input"));
    }
    if q.den.is_zero() {
        return Err(AlgebraError::DivisionByZeroPolynomial { offset: 0 });
    }
    RationalMap::new(q.num, q.den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_one_formula() {
        let f = parse_map("(z^2-4)/(1+0.25*z)").unwrap();
        assert_eq!(f.num(), &Poly::from_real(&[-4.0, 0.0, 1.0]));
        assert_eq!(f.den(), &Poly::from_real(&[1.0, 0.25]));
    }

    #[test]
    fn example_two_formula() {
        let f = parse_map("((z-2)*(z+0.9)*(z-0.9))/((z-1)*(z+1))").unwrap();
        assert_eq!(f.degree(), 3);
        let z = Complex64::new(0.3, 0.1);
        let direct = (z - 2.0) * (z + 0.9) * (z - 0.9) / ((z - 1.0) * (z + 1.0));
        assert!((f.eval_complex(z).finite().unwrap() - direct).norm() < 1e-13);
    }

    #[test]
    fn monomial_and_precedence() {
        let f = parse_map("z^2").unwrap();
        assert_eq!(f.num(), &Poly::from_real(&[0.0, 0.0, 1.0]));
        let g = parse_map("2*z^2 - 1").unwrap();
        assert_eq!(g.num(), &Poly::from_real(&[-1.0, 0.0, 2.0]));
        let h = parse_map("1 - z - z").unwrap();
        assert_eq!(h.num(), &Poly::from_real(&[1.0, -2.0]));
    }

    #[test]
    fn errors_carry_offsets() {
        match parse_map("z^2 + * 3") {
            Err(AlgebraError::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("unexpected {other:?}"),
        }
        match parse_map("z/(z-z)") {
            Err(AlgebraError::DivisionByZeroPolynomial { offset }) => assert_eq!(offset, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_map("(z+1"), Err(AlgebraError::Syntax { .. })));
        assert!(matches!(parse_map("z^x"), Err(AlgebraError::Syntax { .. })));
        assert!(matches!(parse_map("z z"), Err(AlgebraError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn common_factors_cancel() {
        let f = parse_map("(z^2-1)/(z-1)").unwrap();
        assert_eq!(f.degree(), 1);
    }

    #[test]
    fn printed_form_parses_back() {
        let f = parse_map("(-0.3*z^3 + 2*z - 0.125)/(z^2 + 0.5)").unwrap();
        let text = f.to_expression().unwrap();
        let g = parse_map(&text).unwrap();
        assert!(f.num().distance(g.num()) < 1e-12);
        assert!(f.den().distance(g.den()) < 1e-12);
    }
}
