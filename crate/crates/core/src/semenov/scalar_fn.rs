//! Scalar functions `(0, inf) -> [0, 1)` as specified in configs: a
//! constant, a piecewise-linear table, or a small arithmetic expression
//! over `+`, `-`, `*`/`×`, `min`, `max`, constants, and the argument `t`.

use crate::error::SemenovError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarFn {
    Constant { value: f64 },
    /// Piecewise-linear over `(t, value)` pairs, clamped to `[0, 1 - 1e-9]`
    /// in value and to the end entries outside the table's range.
    Table { points: Vec<(f64, f64)> },
    Expr { source: String },
}

const TABLE_CLAMP: f64 = 1.0 - 1e-9;

impl ScalarFn {
    pub fn constant(value: f64) -> Result<Self, SemenovError> {
        if !(0.0..1.0).contains(&value) {
            return Err(SemenovError::RangeViolation {
                arg: f64::NAN,
                value,
            });
        }
        Ok(ScalarFn::Constant { value })
    }

    pub fn table(mut points: Vec<(f64, f64)>) -> Result<Self, SemenovError> {
        if points.is_empty() {
            return Err(SemenovError::BadGrid);
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(ScalarFn::Table { points })
    }

    /// Parse an expression eagerly so construction fails fast.
    pub fn expr(source: &str) -> Result<Self, SemenovError> {
        parse(source)?;
        Ok(ScalarFn::Expr {
            source: source.to_string(),
        })
    }

    /// CLI syntax: `table:(t1,v1),(t2,v2),...` or any expression (a bare
    /// number is a constant expression).
    pub fn parse_cli(input: &str) -> Result<Self, SemenovError> {
        if let Some(rest) = input.strip_prefix("table:") {
            let mut points = Vec::new();
            for chunk in rest.split("),") {
                let chunk = chunk.trim().trim_start_matches('(').trim_end_matches(')');
                let mut it = chunk.split(',');
                let t = it
                    .next()
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| SemenovError::Parse {
                        input: input.into(),
                        reason: "bad table entry".into(),
                    })?;
                let v = it
                    .next()
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| SemenovError::Parse {
                        input: input.into(),
                        reason: "bad table entry".into(),
                    })?;
                points.push((t, v));
            }
            return ScalarFn::table(points);
        }
        if let Ok(v) = input.trim().parse::<f64>() {
            return ScalarFn::constant(v);
        }
        ScalarFn::expr(input)
    }

    pub fn describe(&self) -> String {
        match self {
            ScalarFn::Constant { value } => format!("constant {value}"),
            ScalarFn::Table { points } => format!("table with {} points", points.len()),
            ScalarFn::Expr { source } => format!("expr {source}"),
        }
    }

    /// Evaluate at `t > 0`; results outside `[0, 1)` are a contract error
    /// except for tables, which clamp by definition.
    pub fn eval(&self, t: f64) -> Result<f64, SemenovError> {
        let value = match self {
            ScalarFn::Constant { value } => *value,
            ScalarFn::Table { points } => {
                let raw = if t <= points[0].0 {
                    points[0].1
                } else if t >= points[points.len() - 1].0 {
                    points[points.len() - 1].1
                } else {
                    let k = points.partition_point(|p| p.0 < t);
                    let (t0, v0) = points[k - 1];
                    let (t1, v1) = points[k];
                    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                };
                raw.clamp(0.0, TABLE_CLAMP)
            }
            ScalarFn::Expr { source } => {
                let ast = parse(source)?;
                ast.eval(t)
            }
        };
        if !(0.0..1.0).contains(&value) {
            return Err(SemenovError::RangeViolation { arg: t, value });
        }
        Ok(value)
    }
}

enum Node {
    Num(f64),
    Arg,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Min(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, t: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Arg => t,
            Node::Add(a, b) => a.eval(t) + b.eval(t),
            Node::Sub(a, b) => a.eval(t) - b.eval(t),
            Node::Mul(a, b) => a.eval(t) * b.eval(t),
            Node::Neg(a) => -a.eval(t),
            Node::Min(a, b) => a.eval(t).min(b.eval(t)),
            Node::Max(a, b) => a.eval(t).max(b.eval(t)),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

fn parse(src: &str) -> Result<Node, SemenovError> {
    let mut p = Parser {
        src,
        bytes: src.as_bytes(),
        pos: 0,
    };
    let node = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("trailing input"));
    }
    Ok(node)
}

impl<'a> Parser<'a> {
    fn err(&self, reason: &str) -> SemenovError {
        SemenovError::Parse {
            input: self.src.to_string(),
            reason: format!("{reason} at byte {}", self.pos),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, SemenovError> {
        let mut node = self.term()?;
        loop {
            if self.eat(b'+') {
                node = Node::Add(Box::new(node), Box::new(self.term()?));
            } else if self.eat(b'-') {
                node = Node::Sub(Box::new(node), Box::new(self.term()?));
            } else {
                return Ok(node);
            }
        }
    }

    fn term(&mut self) -> Result<Node, SemenovError> {
        let mut node = self.factor()?;
        loop {
            self.skip_ws();
            let times = if self.eat(b'*') {
                true
            } else if self.src[self.pos..].starts_with('×') {
                self.pos += '×'.len_utf8();
                true
            } else {
                false
            };
            if !times {
                return Ok(node);
            }
            node = Node::Mul(Box::new(node), Box::new(self.factor()?));
        }
    }

    fn factor(&mut self) -> Result<Node, SemenovError> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        if self.eat(b'(') {
            let inner = self.expr()?;
            if !self.eat(b')') {
                return Err(self.err("missing )"));
            }
            return Ok(inner);
        }
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let ident = self.ident();
                match ident.as_str() {
                    "t" | "r" | "s" => Ok(Node::Arg),
                    "min" | "max" => {
                        if !self.eat(b'(') {
                            return Err(self.err("expected ("));
                        }
                        let a = self.expr()?;
                        if !self.eat(b',') {
                            return Err(self.err("expected ,"));
                        }
                        let b = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.err("expected )"));
                        }
                        if ident == "min" {
                            Ok(Node::Min(Box::new(a), Box::new(b)))
                        } else {
                            Ok(Node::Max(Box::new(a), Box::new(b)))
                        }
                    }
                    _ => Err(self.err("unknown identifier")),
                }
            }
            _ => Err(self.err("expected a factor")),
        }
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        self.src[start..self.pos].to_string()
    }

    fn number(&mut self) -> Result<Node, SemenovError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit()
                || self.bytes[self.pos] == b'.'
                || self.bytes[self.pos] == b'e'
                || self.bytes[self.pos] == b'E'
                || ((self.bytes[self.pos] == b'-' || self.bytes[self.pos] == b'+')
                    && self.pos > start
                    && (self.bytes[self.pos - 1] == b'e' || self.bytes[self.pos - 1] == b'E')))
        {
            self.pos += 1;
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Node::Num)
            .map_err(|_| self.err("bad number"))
    }
}
