//! A small propositional language over named counters:
//! `requests / offers > 1`, `(a + b) * 2 <= c - 1`.
//!
//! A [`MetricExpr`] is one comparison between two arithmetic terms; the
//! comparison can only appear at the root.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::GroundingError;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("expression parse error at byte {position}: {message}")]
pub struct ExprParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Comparison {
    fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
            Comparison::Eq => "=",
        }
    }

    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparison::Lt => lhs < rhs,
            Comparison::Le => lhs <= rhs,
            Comparison::Gt => lhs > rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Eq => lhs == rhs,
        }
    }
}

/// Arithmetic term over metrics and literals.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Metric(String),
    Literal(f64),
    Neg(Box<Term>),
    Binary(BinOp, Box<Term>, Box<Term>),
}

impl Term {
    pub fn eval(&self, counters: &BTreeMap<String, u64>) -> Result<f64, GroundingError> {
        match self {
            Term::Metric(name) => counters
                .get(name)
                .map(|v| *v as f64)
                .ok_or_else(|| GroundingError::MissingMetric(name.clone())),
            Term::Literal(v) => Ok(*v),
            Term::Neg(t) => Ok(-t.eval(counters)?),
            Term::Binary(op, l, r) => {
                let (l, r) = (l.eval(counters)?, r.eval(counters)?);
                Ok(match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(GroundingError::DivisionByZero(self.to_string()));
                        }
                        l / r
                    }
                })
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Binary(op, ..) => op.precedence(),
            Term::Neg(_) => 3,
            Term::Metric(_) | Term::Literal(_) => 4,
        }
    }

    pub fn metrics(&self, out: &mut Vec<String>) {
        match self {
            Term::Metric(m) => out.push(m.clone()),
            Term::Literal(_) => {}
            Term::Neg(t) => t.metrics(out),
            Term::Binary(_, l, r) => {
                l.metrics(out);
                r.metrics(out);
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, t: &Term, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({t})")
    } else {
        write!(f, "{t}")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Metric(m) => f.write_str(m),
            Term::Literal(v) => write!(f, "{v}"),
            Term::Neg(t) => {
                f.write_str("-")?;
                write_operand(f, t, t.precedence() < 3)
            }
            Term::Binary(op, l, r) => {
                let p = op.precedence();
                write_operand(f, l, l.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, r, r.precedence() <= p)
            }
        }
    }
}

/// A predicate `lhs <cmp> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricExpr {
    pub lhs: Term,
    pub cmp: Comparison,
    pub rhs: Term,
}

impl MetricExpr {
    pub fn parse(src: &str) -> Result<Self, ExprParseError> {
        let mut p = Parser::new(src)?;
        let lhs = p.sum()?;
        let cmp = match p.next() {
            Some((_, Token::Cmp(c))) => c,
            Some((pos, tok)) => {
                return Err(p.error_at(pos, format!("expected comparison, found {tok}")))
            }
            None => return Err(p.error_at(src.len(), "expected comparison".into())),
        };
        let rhs = p.sum()?;
        if let Some((pos, tok)) = p.next() {
            return Err(p.error_at(pos, format!("unexpected {tok}")));
        }
        Ok(MetricExpr { lhs, cmp, rhs })
    }

    pub fn eval(&self, counters: &BTreeMap<String, u64>) -> Result<bool, GroundingError> {
        let l = self.lhs.eval(counters)?;
        let r = self.rhs.eval(counters)?;
        Ok(self.cmp.holds(l, r))
    }

    /// Metric names referenced, in order of appearance.
    pub fn metrics(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.lhs.metrics(&mut out);
        self.rhs.metrics(&mut out);
        out
    }
}

impl fmt::Display for MetricExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.cmp.symbol(), self.rhs)
    }
}

impl std::str::FromStr for MetricExpr {
    type Err = ExprParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricExpr::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(BinOp),
    Cmp(Comparison),
    Open,
    Close,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "number {v}"),
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Op(op) => write!(f, "`{}`", op.symbol()),
            Token::Cmp(c) => write!(f, "`{}`", c.symbol()),
            Token::Open => f.write_str("`(`"),
            Token::Close => f.write_str("`)`"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ExprParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Token::Op(BinOp::Add),
            b'-' => Token::Op(BinOp::Sub),
            b'*' => Token::Op(BinOp::Mul),
            b'/' => Token::Op(BinOp::Div),
            b'(' => Token::Open,
            b')' => Token::Close,
            b'<' | b'>' | b'=' => {
                let eq_next = bytes.get(i + 1) == Some(&b'=');
                let cmp = match (c, eq_next) {
                    (b'<', true) => Comparison::Le,
                    (b'<', false) => Comparison::Lt,
                    (b'>', true) => Comparison::Ge,
                    (b'>', false) => Comparison::Gt,
                    _ => Comparison::Eq,
                };
                i += if eq_next { 2 } else { 1 };
                out.push((start, Token::Cmp(cmp)));
                continue;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ExprParseError {
                    position: start,
                    message: format!("bad number `{text}`"),
                })?;
                out.push((start, Token::Num(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Token::Ident(src[start..i].to_owned())));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ExprParseError {
                    position: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ExprParseError> {
        Ok(Parser {
            tokens: tokenize(src)?,
            pos: 0,
            end: src.len(),
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<(usize, Token)> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, position: usize, message: String) -> ExprParseError {
        ExprParseError { position, message }
    }

    fn sum(&mut self) -> Result<Term, ExprParseError> {
        let mut lhs = self.product()?;
        while let Some(Token::Op(op @ (BinOp::Add | BinOp::Sub))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Term::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Term, ExprParseError> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ (BinOp::Mul | BinOp::Div))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Term::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Term, ExprParseError> {
        if let Some(Token::Op(BinOp::Sub)) = self.peek() {
            self.pos += 1;
            return Ok(Term::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Term, ExprParseError> {
        match self.next() {
            Some((_, Token::Num(v))) => Ok(Term::Literal(v)),
            Some((_, Token::Ident(name))) => Ok(Term::Metric(name)),
            Some((pos, Token::Open)) => {
                let inner = self.sum()?;
                match self.next() {
                    Some((_, Token::Close)) => Ok(inner),
                    Some((p, tok)) => Err(self.error_at(p, format!("expected `)`, found {tok}"))),
                    None => Err(self.error_at(pos, "unclosed `(`".into())),
                }
            }
            Some((pos, tok)) => Err(self.error_at(pos, format!("expected a term, found {tok}"))),
            None => Err(self.error_at(self.end, "unexpected end of expression".into())),
        }
    }
}
