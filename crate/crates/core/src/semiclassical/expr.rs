//! Arithmetic expressions over `x1..xN`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number [primary] | 'pi' | 'x' digits | 'exp' '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)`. A number directly followed by another primary multiplies
//! it (`2pi`, `3x1`).

use std::f64::consts::PI;

use crate::error::{Result, ThermoError};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based variable index (`x1` is `Var(0)`).
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    /// Only produced by differentiation; not part of the input grammar.
    Ln(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Panics if a variable index is out of range for `x`; check
    /// [`Expr::arity`] first.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => {
                let base = a.eval(x);
                match **b {
                    Expr::Num(n) if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 => base.powi(n as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Ln(a) => a.eval(x).ln(),
        }
    }

    /// Symbolic partial derivative with respect to `x_{k+1}`.
    pub fn derivative(&self, k: usize) -> Expr {
        use Expr::*;
        let b = |e: Expr| Box::new(e);
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == k { 1.0 } else { 0.0 }),
            Neg(a) => Neg(b(a.derivative(k))),
            Add(x, y) => Add(b(x.derivative(k)), b(y.derivative(k))),
            Sub(x, y) => Sub(b(x.derivative(k)), b(y.derivative(k))),
            Mul(x, y) => Add(
                b(Mul(b(x.derivative(k)), y.clone())),
                b(Mul(x.clone(), b(y.derivative(k)))),
            ),
            Div(x, y) => Div(
                b(Sub(
                    b(Mul(b(x.derivative(k)), y.clone())),
                    b(Mul(x.clone(), b(y.derivative(k)))),
                )),
                b(Pow(y.clone(), b(Num(2.0)))),
            ),
            Pow(x, y) if !y.depends_on(k) => Mul(
                b(Mul(y.clone(), b(Pow(x.clone(), b(Sub(y.clone(), b(Num(1.0)))))))),
                b(x.derivative(k)),
            ),
            // d(x^y) = x^y (y' ln x + y x'/x)
            Pow(x, y) => Mul(
                b(self.clone()),
                b(Add(
                    b(Mul(b(y.derivative(k)), b(Ln(x.clone())))),
                    b(Div(b(Mul(y.clone(), b(x.derivative(k)))), x.clone())),
                )),
            ),
            Exp(a) => Mul(b(self.clone()), b(a.derivative(k))),
            Ln(a) => Div(b(a.derivative(k)), a.clone()),
        }
    }

    pub fn depends_on(&self, k: usize) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(i) => *i == k,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Ln(a) => a.depends_on(k),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(k) || b.depends_on(k)
            }
        }
    }

    /// Number of variables needed: one past the largest index used.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Ln(a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }
}

/// A constant expression such as `2pi` or `1/3`, as accepted by numeric
/// command-line flags.
pub fn parse_constant(src: &str) -> Result<f64> {
    let e = Expr::parse(src)?;
    if e.arity() > 0 {
        return Err(ThermoError::Parse {
            pos: 0,
            msg: "constant must not reference variables".into(),
        });
    }
    Ok(e.eval(&[]))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ThermoError {
        ThermoError::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat(b'^') {
            Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let n = self.number()?;
                // implicit product: 2pi, 3x1, 2(x1+1)
                match self.src.get(self.pos) {
                    Some(c) if c.is_ascii_alphabetic() || *c == b'(' => {
                        Ok(Expr::Mul(Box::new(n), Box::new(self.primary()?)))
                    }
                    _ => Ok(n),
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        // exponent only when followed by a digit (keeps `2exp(1)` working)
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut q = self.pos + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                self.pos = q;
                digits(&mut self.pos);
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Expr::Num).map_err(|_| ThermoError::Parse {
            pos: start,
            msg: format!("malformed number '{text}'"),
        })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match word {
            "pi" => Ok(Expr::Num(PI)),
            "exp" => {
                if !self.eat(b'(') {
                    return Err(self.error("expected '(' after exp"));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(Expr::Exp(Box::new(arg)))
            }
            w if w.len() > 1 && w.starts_with('x') && w[1..].bytes().all(|b| b.is_ascii_digit()) => {
                match w[1..].parse::<usize>() {
                    Ok(k) if k >= 1 => Ok(Expr::Var(k - 1)),
                    _ => Err(ThermoError::Parse {
                        pos: start,
                        msg: format!("variable index must be >= 1 in '{w}'"),
                    }),
                }
            }
            _ => Err(ThermoError::Parse {
                pos: start,
                msg: format!("unknown identifier '{word}'"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: &[f64]) -> f64 {
        Expr::parse(s).unwrap().eval(x)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", &[]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", &[]), 9.0);
        assert_eq!(ev("2^3^2", &[]), 512.0);
        assert_eq!(ev("-x1^2", &[3.0]), -9.0);
        assert_eq!(ev("2^-1", &[]), 0.5);
        assert_eq!(ev("8 / 4 / 2", &[]), 1.0);
        assert_eq!(ev("1 - 2 - 3", &[]), -4.0);
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(ev("0.5*x1^2 + 2*x2^2", &[2.0, 1.0]), 4.0);
        assert_eq!(ev("exp(0)", &[]), 1.0);
        assert_eq!(Expr::parse("x3 + x1").unwrap().arity(), 3);
        assert!((ev("2pi", &[]) - 2.0 * PI).abs() < 1e-15);
        assert_eq!(ev("3x1", &[2.0]), 6.0);
        assert_eq!(ev("1.5e2", &[]), 150.0);
        assert_eq!(ev("2exp(0)", &[]), 2.0);
    }

    #[test]
    fn derivatives_match_differences() {
        let cases = [
            "0.5*x1^2 + 2*x2^2",
            "x1^4 - x1*x2 + 3",
            "exp(-x1^2/2) / (1 + x2^2)",
            "x1^x2",
            "-(x1 - 1)^3 * 2pi",
        ];
        let x = [1.3, 0.7];
        for src in cases {
            let e = Expr::parse(src).unwrap();
            for k in 0..2 {
                let d = e.derivative(k).eval(&x);
                let h = 1e-5;
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let fd = (e.eval(&xp) - e.eval(&xm)) / (2.0 * h);
                assert!((d - fd).abs() < 1e-7 * (1.0 + d.abs()), "{src} d/dx{}: {d} vs {fd}", k + 1);
            }
        }
        // integer powers stay defined at negative bases
        let e = Expr::parse("x1^3").unwrap();
        assert_eq!(e.derivative(0).eval(&[-2.0]), 12.0);
        assert!(!e.depends_on(1));
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(Expr::parse("1 +"), Err(ThermoError::Parse { pos: 3, .. })));
        assert!(matches!(Expr::parse("x0"), Err(ThermoError::Parse { pos: 0, .. })));
        assert!(matches!(Expr::parse("sin(x1)"), Err(ThermoError::Parse { .. })));
        assert!(matches!(Expr::parse("(1"), Err(ThermoError::Parse { .. })));
        assert!(matches!(Expr::parse("1 2"), Err(ThermoError::Parse { .. })));
        assert!(parse_constant("x1").is_err());
        assert!((parse_constant("pi/2").unwrap() - PI / 2.0).abs() < 1e-16);
    }
}
