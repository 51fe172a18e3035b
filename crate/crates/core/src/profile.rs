//! Radial profile functions `f(r)` for domains `{|z2| < f(|z1|)}`.
//!
//! The grammar is deliberately small:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'r' | 'exp' '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus and is right associative, so
//! `-r^2` is `-(r^2)` and `2^-1` is `0.5`.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn eval<T: Scalar>(&self, r: T) -> T {
        match self {
            Expr::Num(x) => T::of(*x),
            Expr::Var => r,
            Expr::Neg(a) => -a.eval(r),
            Expr::Add(a, b) => a.eval(r) + b.eval(r),
            Expr::Sub(a, b) => a.eval(r) - b.eval(r),
            Expr::Mul(a, b) => a.eval(r) * b.eval(r),
            Expr::Div(a, b) => a.eval(r) / b.eval(r),
            Expr::Pow(a, b) => a.eval(r).powf(b.eval(r)),
            Expr::Exp(a) => a.eval(r).exp(),
        }
    }
}

/// Fully parenthesized rendering; parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Var => write!(f, "r"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

/// A parsed profile `f: [0, inf) -> (0, inf)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileFunction {
    source: String,
    expr: Expr,
}

/// Points at which a freshly parsed profile must be positive and finite.
pub const PROBE_POINTS: [f64; 3] = [0.0, 1.0, 10.0];

impl ProfileFunction {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval<T: Scalar>(&self, r: T) -> T {
        self.expr.eval(r)
    }

    /// Estimate of `sup f` on `[0, radius]` from a dense grid, padded by 5%.
    pub(crate) fn sup_on(&self, radius: f64) -> f64 {
        const GRID: usize = 20_000;
        let mut best = 0.0f64;
        for i in 0..=GRID {
            let r = radius * i as f64 / GRID as f64;
            let v = self.eval(r);
            if v.is_finite() {
                best = best.max(v);
            }
        }
        best * 1.05
    }

    /// Power-law decay exponent `p` with `f(r) ~ C r^-p`, if the profile
    /// looks polynomially decaying far out. Returns `None` for faster than
    /// polynomial decay (the value underflows, or the local exponent keeps
    /// growing between decades).
    pub(crate) fn power_decay_exponent(&self) -> Option<f64> {
        let slope = |a: f64, b: f64| -> Option<f64> {
            let (fa, fb) = (self.eval(a), self.eval(b));
            if fa > 0.0 && fb > 0.0 && fa.is_finite() && fb.is_finite() {
                Some(-(fb.ln() - fa.ln()) / (b.ln() - a.ln()))
            } else {
                None
            }
        };
        let near = slope(1e4, 1e6)?;
        let far = slope(1e6, 1e8)?;
        if (near - far).abs() <= 0.05 * far.abs().max(1.0) && far < 1e3 {
            Some(far)
        } else {
            None
        }
    }
}

pub fn parse_profile(source: &str) -> Result<ProfileFunction> {
    if source.trim().is_empty() {
        return Err(Error::ProfileSyntax {
            position: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        src: source.as_bytes(),
        pos: 0,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    for r in PROBE_POINTS {
        let v: f64 = expr.eval(r);
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "f({r}) = {v} is not a positive finite number"
            )));
        }
    }
    Ok(ProfileFunction {
        source: source.to_string(),
        expr,
    })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::ProfileSyntax {
            position: self.pos,
            message: message.to_string(),
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
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                match &self.src[start..self.pos] {
                    b"r" => Ok(Expr::Var),
                    b"exp" => {
                        if !self.eat(b'(') {
                            return Err(self.error("expected '(' after exp"));
                        }
                        let e = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(Expr::Exp(Box::new(e)))
                    }
                    other => {
                        self.pos = start;
                        Err(self.error(&format!(
                            "unknown identifier '{}'",
                            String::from_utf8_lossy(other)
                        )))
                    }
                }
            }
            Some(_) => Err(self.error("expected a number, 'r', 'exp' or '('")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            digits(self);
        }
        // Exponent only when followed by digits, so "2exp(r)" is not swallowed.
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let mut look = self.pos + 1;
            if look < self.src.len() && matches!(self.src[look], b'+' | b'-') {
                look += 1;
            }
            if look < self.src.len() && self.src[look].is_ascii_digit() {
                self.pos = look;
                digits(self);
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| Error::ProfileSyntax {
            position: start,
            message: format!("malformed number '{text}'"),
        })
    }
}
