//! Arithmetic expressions over the position `x` and the control `a`.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | 'x' | 'a' | '(' expr ')'
//!          | ('abs' | 'exp') '(' expr ')'
//!          | ('min' | 'max') '(' expr ',' expr ')'
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Abs,
    Exp,
}

/// Parsed expression tree. Literals are kept in `f64` and converted on evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    A,
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        if source.trim().is_empty() {
            return Err(Error::Syntax { offset: 0, message: "empty expression".into() });
        }
        let mut p = Parser { src: source.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Evaluates the expression. Division by an exact zero is an error; so is
    /// any non-finite intermediate result.
    pub fn eval<T: Real>(&self, x: T, a: T) -> Result<T> {
        let v = self.eval_inner(x, a)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { what: self.to_string(), x: x.to_f64_lossy(), a: a.to_f64_lossy() })
        }
    }

    fn eval_inner<T: Real>(&self, x: T, a: T) -> Result<T> {
        Ok(match self {
            Expr::Num(v) => T::lit(*v),
            Expr::X => x,
            Expr::A => a,
            Expr::Unary(op, e) => {
                let v = e.eval_inner(x, a)?;
                match op {
                    UnOp::Neg => -v,
                    UnOp::Abs => v.abs(),
                    UnOp::Exp => v.exp(),
                }
            }
            Expr::Binary(op, l, r) => {
                let l = l.eval_inner(x, a)?;
                let r = r.eval_inner(x, a)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == T::zero() {
                            return Err(Error::DivisionByZero);
                        }
                        l / r
                    }
                    BinOp::Min => l.min(r),
                    BinOp::Max => l.max(r),
                }
            }
        })
    }

    /// True when the expression does not mention `x`.
    pub fn is_position_free(&self) -> bool {
        match self {
            Expr::X => false,
            Expr::Num(_) | Expr::A => true,
            Expr::Unary(_, e) => e.is_position_free(),
            Expr::Binary(_, l, r) => l.is_position_free() && r.is_position_free(),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:?}` prints the shortest representation that reads back exactly.
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::X => f.write_str("x"),
            Expr::A => f.write_str("a"),
            Expr::Unary(UnOp::Neg, e) => write!(f, "(-{e})"),
            Expr::Unary(UnOp::Abs, e) => write!(f, "abs({e})"),
            Expr::Unary(UnOp::Exp, e) => write!(f, "exp({e})"),
            Expr::Binary(op, l, r) => match op {
                BinOp::Add => write!(f, "({l} + {r})"),
                BinOp::Sub => write!(f, "({l} - {r})"),
                BinOp::Mul => write!(f, "({l} * {r})"),
                BinOp::Div => write!(f, "({l} / {r})"),
                BinOp::Min => write!(f, "min({l}, {r})"),
                BinOp::Max => write!(f, "max({l}, {r})"),
            },
        }
    }
}

struct Parser<'s> {
    src: &'s [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: &str) -> Error {
        Error::Syntax { offset: self.pos, message: message.to_string() }
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.err(&format!("unexpected character `{}`", c as char))),
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
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
                return Err(self.err("malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| Error::Syntax { offset: start, message: format!("malformed number `{text}`") })
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "x" => Ok(Expr::X),
            "a" => Ok(Expr::A),
            "abs" | "exp" => {
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                let op = if name == "abs" { UnOp::Abs } else { UnOp::Exp };
                Ok(Expr::Unary(op, Box::new(arg)))
            }
            "min" | "max" => {
                self.expect(b'(')?;
                let l = self.expr()?;
                self.expect(b',')?;
                let r = self.expr()?;
                self.expect(b')')?;
                let op = if name == "min" { BinOp::Min } else { BinOp::Max };
                Ok(Expr::Binary(op, Box::new(l), Box::new(r)))
            }
            _ => Err(Error::UnknownIdentifier { name: name.to_string(), offset: start }),
        }
    }
}
