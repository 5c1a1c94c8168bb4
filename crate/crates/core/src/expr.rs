//! A small expression language for closed-form metric components.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom [ "^" unary ] ;              (* right-associative *)
//! atom    = number | ident | func "(" expr ")" | "(" expr ")" ;
//! func    = "sin" | "cos" | "exp" | "log" | "sqrt" ;
//! number  = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ]
//!         | "." digit { digit } [ exponent ] ;
//! ident   = letter { letter | digit | "_" } ;   (* a coordinate name, or "pi" *)
//! ```
//!
//! `-a^b` parses as `-(a^b)`. `log` is the natural logarithm.
//!
//! Variables are resolved against a list of coordinate names at parse time, so an
//! [`Expr`] only stores indices. Printing therefore needs the same names back, see
//! [`Expr::display`].

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => math::sin(x),
            Func::Cos => math::cos(x),
            Func::Exp => math::exp(x),
            Func::Log => math::ln(x),
            Func::Sqrt => math::sqrt(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Index into the coordinate list the expression was parsed against.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(source: &str, names: &[&str]) -> Result<Expr> {
        let mut p = Parser { src: source.as_bytes(), pos: 0, names };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(Error::Syntax { offset: p.pos, message: "unexpected trailing input" });
        }
        Ok(e)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => vars[*i],
            Expr::Neg(a) => -a.eval(vars),
            Expr::Add(a, b) => a.eval(vars) + b.eval(vars),
            Expr::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Expr::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Expr::Div(a, b) => a.eval(vars) / b.eval(vars),
            Expr::Pow(a, b) => {
                let base = a.eval(vars);
                match b.as_const() {
                    Some(c) => pow_const(base, c),
                    None => math::powf(base, b.eval(vars)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(vars)),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Exact symbolic derivative with respect to variable `var`, lightly simplified.
    pub fn differentiate(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.differentiate(var)),
            Expr::Add(a, b) => add(a.differentiate(var), b.differentiate(var)),
            Expr::Sub(a, b) => sub(a.differentiate(var), b.differentiate(var)),
            Expr::Mul(a, b) => add(
                mul(a.differentiate(var), (**b).clone()),
                mul((**a).clone(), b.differentiate(var)),
            ),
            Expr::Div(a, b) => {
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                if db.is_zero() {
                    return div(da, (**b).clone());
                }
                div(
                    sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    pow((**b).clone(), Expr::Const(2.0)),
                )
            }
            Expr::Pow(a, b) => {
                let da = a.differentiate(var);
                if let Some(c) = b.as_const() {
                    return mul(mul(Expr::Const(c), pow((**a).clone(), Expr::Const(c - 1.0))), da);
                }
                let db = b.differentiate(var);
                let log_a = call(Func::Log, (**a).clone());
                if let Some(_) = a.as_const() {
                    return mul(mul(self.clone(), log_a), db);
                }
                // d(a^b) = a^b (b' ln a + b a'/a)
                mul(
                    self.clone(),
                    add(mul(db, log_a), div(mul((**b).clone(), da), (**a).clone())),
                )
            }
            Expr::Call(f, a) => {
                let da = a.differentiate(var);
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Log => return div(da, inner),
                    Func::Sqrt => {
                        return div(da, mul(Expr::Const(2.0), call(Func::Sqrt, inner)));
                    }
                };
                mul(outer, da)
            }
        }
    }

    pub fn display<'a>(&'a self, names: &'a [&'a str]) -> Display<'a> {
        Display { expr: self, names }
    }

    pub fn to_source(&self, names: &[&str]) -> String {
        self.display(names).to_string()
    }

    fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn pow_const(base: f64, c: f64) -> f64 {
    if c == 2.0 {
        base * base
    } else if c == 1.0 {
        base
    } else if c == 0.5 {
        math::sqrt(base)
    } else {
        math::powf(base, c)
    }
}

// Simplifying constructors.

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        Expr::Mul(l, r) if l.as_const().is_some() => Expr::Mul(Box::new(Expr::Const(-l.as_const().unwrap())), r),
        other => Expr::Neg(Box::new(other)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (_, Some(y)) if y == 0.0 => a,
        (Some(x), _) if x == 0.0 => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::Const(0.0);
    }
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        // keep numeric factors on the left
        (None, Some(_)) => Expr::Mul(Box::new(b), Box::new(a)),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return Expr::Const(0.0);
    }
    if b.is_one() {
        return a;
    }
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (_, Some(y)) if y == 0.0 => Expr::Const(1.0),
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), Some(y)) => Expr::Const(math::powf(x, y)),
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

pub fn call(f: Func, a: Expr) -> Expr {
    match a.as_const() {
        Some(c) => Expr::Const(f.apply(c)),
        None => Expr::Call(f, Box::new(a)),
    }
}

pub struct Display<'a> {
    expr: &'a Expr,
    names: &'a [&'a str],
}

impl Display<'_> {
    fn write(&self, e: &Expr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parens = e.precedence() < min_prec;
        if parens {
            f.write_str("(")?;
        }
        match e {
            Expr::Const(c) => write!(f, "{c}")?,
            Expr::Var(i) => match self.names.get(*i) {
                Some(n) => f.write_str(n)?,
                None => write!(f, "?{i}")?,
            },
            Expr::Neg(a) => {
                f.write_str("-")?;
                self.write(a, 3, f)?;
            }
            Expr::Add(a, b) => {
                self.write(a, 1, f)?;
                f.write_str(" + ")?;
                self.write(b, 2, f)?;
            }
            Expr::Sub(a, b) => {
                self.write(a, 1, f)?;
                f.write_str(" - ")?;
                self.write(b, 2, f)?;
            }
            Expr::Mul(a, b) => {
                self.write(a, 2, f)?;
                f.write_str("*")?;
                self.write(b, 3, f)?;
            }
            Expr::Div(a, b) => {
                self.write(a, 2, f)?;
                f.write_str("/")?;
                self.write(b, 3, f)?;
            }
            Expr::Pow(a, b) => {
                self.write(a, 5, f)?;
                f.write_str("^")?;
                self.write(b, 3, f)?;
            }
            Expr::Call(func, a) => {
                f.write_str(func.name())?;
                f.write_str("(")?;
                self.write(a, 0, f)?;
                f.write_str(")")?;
            }
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, 0, f)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    names: &'a [&'a str],
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8, message: &'static str) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Syntax { offset: self.pos, message })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Const(c) if !c.is_sign_negative() => Expr::Const(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(Error::Syntax { offset: self.pos, message: "unexpected end of input" }),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')', "expected `)`")?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(Error::Syntax { offset: self.pos, message: "unexpected character" }),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(Error::Syntax { offset: start, message: "malformed number" });
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // not an exponent after all
                self.pos = save;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| Error::Syntax { offset: start, message: "malformed number" })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        if self.peek() == Some(b'(') {
            let func = Func::from_name(name)
                .ok_or_else(|| Error::UnknownIdentifier { name: name.to_string(), offset: start })?;
            self.pos += 1;
            let arg = self.expr()?;
            self.expect(b')', "expected `)`")?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if let Some(i) = self.names.iter().position(|n| *n == name) {
            return Ok(Expr::Var(i));
        }
        if name == "pi" {
            return Ok(Expr::Const(math::PI));
        }
        Err(Error::UnknownIdentifier { name: name.to_string(), offset: start })
    }
}

/// Symbolic gradient: one derivative per coordinate.
pub fn gradient(e: &Expr, dim: usize) -> Vec<Expr> {
    (0..dim).map(|k| e.differentiate(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const NAMES: &[&str] = &["r", "y1", "y2"];

    fn p(s: &str) -> Expr {
        Expr::parse(s, NAMES).unwrap()
    }

    #[test]
    fn polynomial_in_disk_coordinates() {
        let e = Expr::parse("1 - y1^2 - y2^2", &["y1", "y2"]).unwrap();
        assert_eq!(e.eval(&[0.3, 0.4]), 1.0 - 0.09 - 0.16);
    }

    #[test]
    fn hyperbolic_conformal_factor() {
        let e = Expr::parse("4/(1-y1^2-y2^2)^2", &["y1", "y2"]).unwrap();
        let rho: f64 = 1.0 - 0.25 - 0.04;
        assert!((e.eval(&[0.5, 0.2]) - 4.0 / (rho * rho)).abs() < 1e-14);
    }

    #[test]
    fn unterminated_call_reports_offset() {
        assert_eq!(
            Expr::parse("sin(", NAMES),
            Err(Error::Syntax { offset: 4, message: "unexpected end of input" })
        );
    }

    #[test]
    fn unknown_identifier() {
        match Expr::parse("r + zeta", NAMES) {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "zeta");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(Expr::parse("tan(r)", NAMES), Err(Error::UnknownIdentifier { .. })));
    }

    #[test]
    fn trailing_garbage() {
        assert!(matches!(Expr::parse("r r", NAMES), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(Expr::parse("(r", NAMES), Err(Error::Syntax { .. })));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(p("-2^2").eval(&[0.0; 3]), -4.0);
        assert_eq!(p("2^-1").eval(&[0.0; 3]), 0.5);
        assert_eq!(p("2^3^2").eval(&[0.0; 3]), 512.0);
    }

    #[test]
    fn derivative_of_polynomial() {
        let d = p("1 - y1^2").differentiate(1);
        assert_eq!(d.to_source(NAMES), "-2*y1");
    }

    #[test]
    fn derivative_product_rule() {
        let d = p("exp(r)*r").differentiate(0);
        assert_eq!(d.to_source(NAMES), "exp(r)*r + exp(r)");
    }

    #[test]
    fn derivative_of_variable_exponent() {
        let e = p("r^y1");
        let (r, y): (f64, f64) = (1.7, 0.6);
        let d_r = e.differentiate(0).eval(&[r, y, 0.0]);
        let d_y = e.differentiate(1).eval(&[r, y, 0.0]);
        assert!((d_r - y * libm::pow(r, y - 1.0)).abs() < 1e-12);
        assert!((d_y - libm::pow(r, y) * libm::log(r)).abs() < 1e-12);
    }

    #[test]
    fn printing_round_trips() {
        for s in ["-(r + y1)*y2", "r/(y1*y2)", "(r^2)^y1", "-r^2", "(-2)^2", "sqrt(r)/2 - -y1", "r - (y1 - y2)"] {
            let e = p(s);
            let again = p(&e.to_source(NAMES));
            assert_eq!(e, again, "{s}");
        }
    }
}
