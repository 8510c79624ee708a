//! A small expression language over the index variable `n`.
//!
//! Used for `λ_n` generators in method specs and for the triangular term
//! generator in custom series files. Grammar:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'n' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func  := ln | sin | cos | exp | sqrt | abs
//! ```
//!
//! `(-1)^n` works as expected because integer powers of negative bases are
//! evaluated exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("expression error at byte {pos}: {msg}")]
pub struct ExprError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Ln,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Index,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, n: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Index => n,
            Node::Neg(a) => -a.eval(n),
            Node::Add(a, b) => a.eval(n) + b.eval(n),
            Node::Sub(a, b) => a.eval(n) - b.eval(n),
            Node::Mul(a, b) => a.eval(n) * b.eval(n),
            Node::Div(a, b) => a.eval(n) / b.eval(n),
            Node::Pow(a, b) => {
                let (base, exp) = (a.eval(n), b.eval(n));
                if exp.fract() == 0.0 && exp.abs() < i32::MAX as f64 {
                    if base == -1.0 {
                        return if (exp as i64) % 2 == 0 { 1.0 } else { -1.0 };
                    }
                    base.powi(exp as i32)
                } else {
                    base.powf(exp)
                }
            }
            Node::Call(f, a) => {
                let x = a.eval(n);
                match f {
                    Func::Ln => x.ln(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Sqrt => x.sqrt(),
                    Func::Abs => x.abs(),
                }
            }
        }
    }
}

/// A parsed expression in `n` that remembers its source text.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let normalized = src.replace('\u{2212}', "-");
        let mut p = Parser {
            src: normalized.as_bytes(),
            pos: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Expr {
            source: src.to_string(),
            root,
        })
    }

    pub fn eval(&self, n: usize) -> f64 {
        self.root.eval(n as f64)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ExprError {
        ExprError {
            pos: self.pos,
            msg: msg.to_string(),
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

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                let func = match word {
                    "n" => return Ok(Node::Index),
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "e" => return Ok(Node::Num(std::f64::consts::E)),
                    "ln" | "log" => Func::Ln,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "sqrt" => Func::Sqrt,
                    "abs" => Func::Abs,
                    _ => {
                        self.pos = start;
                        return Err(self.error(&format!("unknown identifier '{word}'")));
                    }
                };
                if !self.eat(b'(') {
                    return Err(self.error("expected '(' after function name"));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(Node::Call(func, Box::new(arg)))
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && (p.src[p.pos].is_ascii_digit() || p.src[p.pos] == b'.') {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Node::Num).map_err(|_| ExprError {
            pos: start,
            msg: format!("bad number '{text}'"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, n: usize) -> f64 {
        Expr::parse(s).unwrap().eval(n)
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("n+1", 4), 5.0);
        assert_eq!(ev("2*n^2 - 3", 3), 15.0);
        assert_eq!(ev("-2^2", 0), -4.0);
        assert_eq!(ev("(n+1)^-2", 1), 0.25);
        assert_eq!(ev("2^3^2", 0), 512.0);
        assert_eq!(ev("1e-3*n", 2), 2e-3);
        assert_eq!(ev("12/4/3", 0), 1.0);
    }

    #[test]
    fn sign_alternation() {
        for n in 0..6 {
            let want = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(ev("(-1)^n", n), want);
            assert_eq!(ev("(\u{2212}1)^n", n), want);
        }
        assert_eq!(ev("(-1)^n*(n+1)", 3), -4.0);
    }

    #[test]
    fn functions() {
        assert!((ev("ln(n+1)", 1) - std::f64::consts::LN_2).abs() < 1e-16);
        assert!((ev("n*ln(n)", 3) - 3.0 * 3f64.ln()).abs() < 1e-15);
        assert!((ev("sin(pi/2) + cos(0)", 0) - 2.0).abs() < 1e-15);
        assert_eq!(ev("sqrt(n)", 9), 3.0);
    }

    #[test]
    fn errors() {
        assert!(Expr::parse("n+").is_err());
        assert!(Expr::parse("foo(n)").is_err());
        assert!(Expr::parse("(n+1").is_err());
        assert!(Expr::parse("n n").is_err());
        assert!(Expr::parse("").is_err());
        let e = Expr::parse("ln n").unwrap_err();
        assert_eq!(e.pos, 3);
    }

    #[test]
    fn serde_as_string() {
        let e = Expr::parse("ln(n+1)").unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, "\"ln(n+1)\"");
        let back: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
