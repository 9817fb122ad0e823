//! Recursive-descent parser for the expression grammar and the matching printers.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' integer)?
//! base   := number | ident | '(' expr ')' | 'sqrt' '(' expr ')'
//! ```
//! `sqrt` is only accepted when parsing numeric expressions.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::numeric::NumExpr;
use super::poly::Poly;
use super::ratfunc::RatExpr;
use super::ExprError;
use crate::field::Q;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    allow_sqrt: bool,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, allow_sqrt: bool) -> Self {
        Parser { src: text.as_bytes(), pos: 0, allow_sqrt }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax { pos: self.pos, msg: msg.into() })
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

    fn integer(&mut self) -> Result<BigInt, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn expr(&mut self) -> Result<NumExpr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = NumExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = NumExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<NumExpr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = NumExpr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                let at = self.pos;
                let rhs = self.factor()?;
                if matches!(&rhs, NumExpr::Const(c) if c.is_zero()) {
                    return Err(ExprError::DivisionByZero { pos: at });
                }
                lhs = match (lhs, rhs) {
                    (NumExpr::Const(a), NumExpr::Const(b)) => NumExpr::Const(a / b),
                    (l, r) => NumExpr::Div(Box::new(l), Box::new(r)),
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<NumExpr, ExprError> {
        if self.eat(b'-') {
            return Ok(match self.factor()? {
                NumExpr::Const(c) => NumExpr::Const(-c),
                other => NumExpr::Neg(Box::new(other)),
            });
        }
        let base = self.base()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            let e = self.integer()?;
            let e: i32 = match i32::try_from(&e) {
                Ok(v) => v,
                Err(_) => return self.err("exponent too large"),
            };
            return Ok(NumExpr::Pow(Box::new(base), if neg { -e } else { e }));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<NumExpr, ExprError> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(NumExpr::Const(Q::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
                if name == "sqrt" && self.peek() == Some(b'(') {
                    if !self.allow_sqrt {
                        return Err(ExprError::SqrtInSymbolic { pos: start });
                    }
                    self.pos += 1;
                    let e = self.expr()?;
                    if !self.eat(b')') {
                        return self.err("expected ')'");
                    }
                    return Ok(NumExpr::Sqrt(Box::new(e)));
                }
                Ok(NumExpr::Var(name))
            }
            Some(c) => self.err(format!("unexpected character '{}'", c as char)),
        }
    }

    fn finish(mut self) -> Result<NumExpr, ExprError> {
        let e = self.expr()?;
        if self.peek().is_some() {
            return self.err("trailing input");
        }
        Ok(e)
    }
}

/// Parses an expression into a canonical rational function (`sqrt` is rejected).
pub fn parse(text: &str) -> Result<RatExpr, ExprError> {
    let tree = Parser::new(text, false).finish()?;
    tree.to_ratexpr()
}

/// Parses an expression that must be a polynomial.
pub fn parse_poly(text: &str) -> Result<Poly<Q>, ExprError> {
    let r = parse(text)?;
    if !r.is_polynomial() {
        return Err(ExprError::NotPolynomial(text.to_string()));
    }
    Ok(r.num().clone())
}

/// Parses a numeric expression tree (`sqrt` allowed).
pub fn parse_numeric(text: &str) -> Result<NumExpr, ExprError> {
    Parser::new(text, true).finish()
}

fn write_q_abs(f: &mut fmt::Formatter<'_>, c: &Q) -> fmt::Result {
    let n = c.numer().abs();
    if c.denom().is_one() {
        write!(f, "{n}")
    } else {
        write!(f, "{n}/{}", c.denom())
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, names: &[String], e: &[u16]) -> fmt::Result {
    let mut first = true;
    for (k, &p) in e.iter().enumerate() {
        if p == 0 {
            continue;
        }
        if !first {
            write!(f, "*")?;
        }
        first = false;
        write!(f, "{}", names[k])?;
        if p > 1 {
            write!(f, "^{p}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Poly<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let names = self.vars().names();
        for (i, (e, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let constant = e.iter().all(|&x| x == 0);
            let unit = c.numer().abs().is_one() && c.denom().is_one();
            if constant {
                write_q_abs(f, c)?;
            } else {
                if !unit {
                    write_q_abs(f, c)?;
                    write!(f, "*")?;
                }
                write_monomial(f, names, e)?;
            }
        }
        Ok(())
    }
}

/// A denominator can be printed bare when it is a single variable power.
fn bare_denominator(p: &Poly<Q>) -> bool {
    if p.nterms() != 1 || !p.coeffs()[0].is_one() {
        return false;
    }
    p.terms().next().unwrap().0.iter().filter(|&&x| x > 0).count() <= 1
}

impl fmt::Display for RatExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den().is_one() {
            return write!(f, "{}", self.num());
        }
        if self.num().nterms() > 1 {
            write!(f, "({})", self.num())?;
        } else {
            write!(f, "{}", self.num())?;
        }
        if bare_denominator(self.den()) {
            write!(f, "/{}", self.den())
        } else {
            write!(f, "/({})", self.den())
        }
    }
}

impl fmt::Display for NumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

impl NumExpr {
    // precedence: 0 sum, 1 product, 2 power/unary, 3 atom
    fn write_prec(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        let (prec, body): (u8, Box<dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result + '_>) = match self {
            NumExpr::Const(c) => {
                let p = if c.is_negative() || !c.denom().is_one() { 1 } else { 3 };
                (p, Box::new(move |f| {
                    if c.is_negative() {
                        write!(f, "-")?;
                    }
                    write_q_abs(f, c)
                }))
            }
            NumExpr::Var(v) => (3, Box::new(move |f| write!(f, "{v}"))),
            NumExpr::Add(a, b) => (0, Box::new(move |f| {
                a.write_prec(f, 0)?;
                write!(f, " + ")?;
                b.write_prec(f, 1)
            })),
            NumExpr::Sub(a, b) => (0, Box::new(move |f| {
                a.write_prec(f, 0)?;
                write!(f, " - ")?;
                b.write_prec(f, 1)
            })),
            NumExpr::Mul(a, b) => (1, Box::new(move |f| {
                a.write_prec(f, 1)?;
                write!(f, "*")?;
                b.write_prec(f, 2)
            })),
            NumExpr::Div(a, b) => (1, Box::new(move |f| {
                a.write_prec(f, 1)?;
                write!(f, "/")?;
                b.write_prec(f, 2)
            })),
            NumExpr::Neg(a) => (2, Box::new(move |f| {
                write!(f, "-")?;
                a.write_prec(f, 2)
            })),
            NumExpr::Pow(a, e) => (2, Box::new(move |f| {
                a.write_prec(f, 3)?;
                if *e < 0 {
                    write!(f, "^-{}", -e)
                } else {
                    write!(f, "^{e}")
                }
            })),
            NumExpr::Sqrt(a) => (3, Box::new(move |f| {
                write!(f, "sqrt(")?;
                a.write_prec(f, 0)?;
                write!(f, ")")
            })),
        };
        if prec < ctx {
            write!(f, "(")?;
            body(f)?;
            write!(f, ")")
        } else {
            body(f)
        }
    }

    /// Converts to a rational function; fails on `sqrt`.
    pub fn to_ratexpr(&self) -> Result<RatExpr, ExprError> {
        Ok(match self {
            NumExpr::Const(c) => RatExpr::constant(c.clone()),
            NumExpr::Var(v) => RatExpr::var(v),
            NumExpr::Add(a, b) => a.to_ratexpr()? + b.to_ratexpr()?,
            NumExpr::Sub(a, b) => a.to_ratexpr()? - b.to_ratexpr()?,
            NumExpr::Mul(a, b) => a.to_ratexpr()? * b.to_ratexpr()?,
            NumExpr::Div(a, b) => {
                let d = b.to_ratexpr()?;
                if d.is_zero() {
                    return Err(ExprError::DivisionByZero { pos: 0 });
                }
                a.to_ratexpr()? / d
            }
            NumExpr::Neg(a) => -a.to_ratexpr()?,
            NumExpr::Pow(a, e) => {
                let b = a.to_ratexpr()?;
                if *e < 0 && b.is_zero() {
                    return Err(ExprError::DivisionByZero { pos: 0 });
                }
                b.pow(*e)
            }
            NumExpr::Sqrt(_) => return Err(ExprError::SqrtInSymbolic { pos: 0 }),
        })
    }
}

impl From<&RatExpr> for NumExpr {
    fn from(r: &RatExpr) -> Self {
        fn poly_tree(p: &Poly<Q>) -> NumExpr {
            let names = p.vars().names();
            let mut acc: Option<NumExpr> = None;
            for (e, c) in p.terms() {
                let mut t = NumExpr::Const(c.clone());
                for (k, &x) in e.iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    let v = NumExpr::Var(names[k].clone());
                    let v = if x == 1 { v } else { NumExpr::Pow(Box::new(v), x as i32) };
                    t = NumExpr::Mul(Box::new(t), Box::new(v));
                }
                acc = Some(match acc {
                    None => t,
                    Some(a) => NumExpr::Add(Box::new(a), Box::new(t)),
                });
            }
            acc.unwrap_or(NumExpr::Const(Q::zero()))
        }
        let n = poly_tree(r.num());
        if r.den().is_one() {
            n
        } else {
            NumExpr::Div(Box::new(n), Box::new(poly_tree(r.den())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_polynomial() {
        let p = parse("x^2 - 1").unwrap();
        assert_eq!(p.to_string(), "x^2 - 1");
        assert_eq!(p.var_names(), vec!["x".to_string()]);
    }

    #[test]
    fn reduced_quotient() {
        let p = parse("(x+y)/(x-y)").unwrap();
        assert_eq!(p.to_string(), "(x + y)/(x - y)");
        let p = parse("(x^2-y^2)/(x-y)").unwrap();
        assert_eq!(p.to_string(), "x + y");
    }

    #[test]
    fn jet_tokens() {
        let p = parse("P_yy*(Q-R)").unwrap();
        assert_eq!(p.var_names(), vec!["P_yy", "Q", "R"]);
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(parse("x + * y"), Err(ExprError::Syntax { pos: 4, .. })));
        assert!(matches!(parse("1/0"), Err(ExprError::DivisionByZero { .. })));
        assert!(matches!(parse("x/(y-y)"), Err(ExprError::DivisionByZero { .. })));
        assert!(matches!(parse("2*sqrt(x)"), Err(ExprError::SqrtInSymbolic { pos: 2 })));
        assert!(parse_numeric("2*sqrt(x)").is_ok());
        assert!(matches!(parse("(x"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(parse("-x^2").unwrap(), -parse("x*x").unwrap());
        assert_eq!(parse("-2^2").unwrap(), RatExpr::int(-4));
        assert_eq!(parse("x^-1*-y").unwrap(), -parse("y/x").unwrap());
    }

    #[test]
    fn print_parse_roundtrip() {
        for s in ["-3/2*x*y^2 + x - 7/3", "(x + 1)/(x*y)", "-x/y^3", "1/(2*x + 3)", "(a - b)/(3*c)"] {
            let e = parse(s).unwrap();
            let back = parse(&e.to_string()).unwrap();
            assert_eq!(e, back, "{s}");
        }
    }

    #[test]
    fn numeric_tree_roundtrip() {
        let t = parse_numeric("1/(y + sqrt(y^2 - 2*x))").unwrap();
        let back = parse_numeric(&t.to_string()).unwrap();
        assert_eq!(t, back);
    }
}
