//! A small infix language for smooth functions of `x1, ..., xn`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | variable | 'pi' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so
//! `-x1^2^3` parses as `-(x1^(2^3))`. Functions are drawn from the closed set
//! `sin cos exp log tanh sqrt abs pow`; `pow` takes two arguments, the others
//! one. There is no implicit multiplication.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Jet, Point};
use crate::series::Univariate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A parse problem located at a byte offset of the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub offset: usize,
    pub message: String,
    pub severity: Severity,
}

impl ParseDiagnostic {
    fn error(offset: usize, message: impl Into<String>) -> Self {
        ParseDiagnostic { offset, message: message.into(), severity: Severity::Error }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev} at byte {}: {}", self.offset, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Tanh,
    Sqrt,
    Abs,
    Pow,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        if self == Func::Pow {
            2
        } else {
            1
        }
    }

    fn univariate(self) -> Univariate {
        match self {
            Func::Sin => Univariate::Sin,
            Func::Cos => Univariate::Cos,
            Func::Exp => Univariate::Exp,
            Func::Log => Univariate::Ln,
            Func::Tanh => Univariate::Tanh,
            Func::Sqrt => Univariate::Sqrt,
            Func::Abs => Univariate::Abs,
            Func::Pow => unreachable!("pow is binary"),
        }
    }
}

/// Expression tree. Variables are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Value of a variable-free subtree.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            Expr::Var(_) => None,
            _ if self.has_variables() => None,
            _ => self.eval(&[]).ok(),
        }
    }

    pub fn has_variables(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(_) => true,
            Expr::Neg(a) => a.has_variables(),
            Expr::Binary(_, a, b) => a.has_variables() || b.has_variables(),
            Expr::Call(_, args) => args.iter().any(Expr::has_variables),
        }
    }

    /// Largest variable index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) => a.arity(),
            Expr::Binary(_, a, b) => a.arity().max(b.arity()),
            Expr::Call(_, args) => args.iter().map(Expr::arity).max().unwrap_or(0),
        }
    }

    /// Plain floating-point evaluation.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *x.get(*i).ok_or(Error::IndexOutOfRange { index: *i, dimension: x.len() })?,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(x)?, b.eval(x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(Error::Domain { function: "division", value: b });
                        }
                        a / b
                    }
                    BinOp::Pow => scalar_pow(a, b)?,
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(x)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Tanh => a.tanh(),
                    Func::Abs => a.abs(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(Error::Domain { function: "log", value: a });
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(Error::Domain { function: "sqrt", value: a });
                        }
                        a.sqrt()
                    }
                    Func::Pow => scalar_pow(a, args[1].eval(x)?)?,
                }
            }
        })
    }

    /// Jet of the expression at `point`, truncated at `order`.
    pub fn eval_jet(&self, point: &Point, order: usize) -> Result<Jet> {
        Ok(match self {
            Expr::Const(c) => Jet::constant(*c, point, order),
            Expr::Var(i) => Jet::variable(*i, point, order)?,
            Expr::Neg(a) => a.eval_jet(point, order)?.neg(),
            Expr::Binary(op, a, b) => match op {
                BinOp::Add => a.eval_jet(point, order)?.add(&b.eval_jet(point, order)?)?,
                BinOp::Sub => a.eval_jet(point, order)?.sub(&b.eval_jet(point, order)?)?,
                BinOp::Mul => a.eval_jet(point, order)?.mul(&b.eval_jet(point, order)?)?,
                BinOp::Div => {
                    let den = b.eval_jet(point, order)?;
                    if den.value() == 0.0 {
                        return Err(Error::Domain { function: "division", value: 0.0 });
                    }
                    a.eval_jet(point, order)?.div(&den)?
                }
                BinOp::Pow => jet_pow(a, b, point, order)?,
            },
            Expr::Call(Func::Pow, args) => jet_pow(&args[0], &args[1], point, order)?,
            Expr::Call(func, args) => args[0].eval_jet(point, order)?.compose_univariate(&func.univariate())?,
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn scalar_pow(base: f64, exponent: f64) -> Result<f64> {
    if exponent.fract() == 0.0 {
        if base == 0.0 && exponent < 0.0 {
            return Err(Error::Domain { function: "pow", value: base });
        }
        return Ok(base.powf(exponent));
    }
    if base < 0.0 {
        return Err(Error::Domain { function: "pow", value: base });
    }
    Ok(base.powf(exponent))
}

fn jet_pow(base: &Expr, exponent: &Expr, point: &Point, order: usize) -> Result<Jet> {
    let b = base.eval_jet(point, order)?;
    match exponent.constant_value() {
        Some(p) => b.compose_univariate(&Univariate::Powf(p)),
        None => {
            // a^b = exp(b log a)
            let e = exponent.eval_jet(point, order)?;
            e.mul(&b.compose_univariate(&Univariate::Ln)?)?.compose_univariate(&Univariate::Exp)
        }
    }
}

/// Variable naming scheme of a source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Variables {
    /// `x1, ..., xn`.
    Indexed(usize),
    /// Explicit names, e.g. `["s"]` for nonlinearities.
    Named(Vec<String>),
}

impl Variables {
    pub fn dimension(&self) -> usize {
        match self {
            Variables::Indexed(n) => *n,
            Variables::Named(names) => names.len(),
        }
    }
}

/// A parsed expression bound to a dimension.
#[derive(Debug, Clone)]
pub struct Expression {
    ast: Arc<Expr>,
    dimension: usize,
    source: Arc<str>,
    warnings: Vec<ParseDiagnostic>,
}

impl Expression {
    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn warnings(&self) -> &[ParseDiagnostic] {
        &self.warnings
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: x.len() });
        }
        self.ast.eval(x)
    }

    pub fn eval_jet(&self, point: &Point, order: usize) -> Result<Jet> {
        if point.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: point.len() });
        }
        self.ast.eval_jet(point, order)
    }
}

/// Parses `source` over the variables `x1, ..., x{dimension}`.
pub fn parse(source: &str, dimension: usize) -> Result<Expression, Vec<ParseDiagnostic>> {
    parse_with(source, &Variables::Indexed(dimension))
}

/// Parses a one-variable expression in `name` (e.g. a nonlinearity in `s`).
pub fn parse_univariate(source: &str, name: &str) -> Result<Expression, Vec<ParseDiagnostic>> {
    parse_with(source, &Variables::Named(vec![name.to_string()]))
}

/// Parses raw bytes; invalid UTF-8 is reported as a diagnostic.
pub fn parse_bytes(source: &[u8], dimension: usize) -> Result<Expression, Vec<ParseDiagnostic>> {
    match std::str::from_utf8(source) {
        Ok(s) => parse(s, dimension),
        Err(e) => Err(vec![ParseDiagnostic::error(e.valid_up_to(), "invalid UTF-8")]),
    }
}

pub fn parse_with(source: &str, vars: &Variables) -> Result<Expression, Vec<ParseDiagnostic>> {
    if vars.dimension() == 0 {
        return Err(vec![ParseDiagnostic::error(0, "dimension must be positive")]);
    }
    let mut parser = Parser { src: source.as_bytes(), pos: 0, vars, errors: Vec::new(), warnings: Vec::new() };
    parser.skip_ws();
    if parser.pos >= parser.src.len() {
        return Err(vec![ParseDiagnostic::error(0, "empty expression")]);
    }
    let ast = match parser.expr(0) {
        Ok(ast) => ast,
        Err(diag) => {
            parser.errors.push(diag);
            return Err(parser.errors);
        }
    };
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        let msg = if parser.src[parser.pos] == b')' {
            "unbalanced parentheses: unexpected ')'".to_string()
        } else {
            format!("unexpected character '{}'", parser.current_char())
        };
        parser.errors.push(ParseDiagnostic::error(parser.pos, msg));
    }
    if !parser.errors.is_empty() {
        return Err(parser.errors);
    }
    Ok(Expression { ast: Arc::new(ast), dimension: vars.dimension(), source: Arc::from(source), warnings: parser.warnings })
}

const MAX_DEPTH: usize = 256;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a Variables,
    errors: Vec<ParseDiagnostic>,
    warnings: Vec<ParseDiagnostic>,
}

type PResult<T> = std::result::Result<T, ParseDiagnostic>;

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

    fn current_char(&self) -> char {
        std::str::from_utf8(&self.src[self.pos..])
            .ok()
            .and_then(|s| s.chars().next())
            .unwrap_or('\u{FFFD}')
    }

    fn expr(&mut self, depth: usize) -> PResult<Expr> {
        if depth > MAX_DEPTH {
            return Err(ParseDiagnostic::error(self.pos, "expression nested too deeply"));
        }
        let mut lhs = self.term(depth)?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term(depth)?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self, depth: usize) -> PResult<Expr> {
        let mut lhs = self.unary(depth)?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary(depth)?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self, depth: usize) -> PResult<Expr> {
        if depth > MAX_DEPTH {
            return Err(ParseDiagnostic::error(self.pos, "expression nested too deeply"));
        }
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary(depth + 1)?)));
        }
        self.power(depth)
    }

    fn power(&mut self, depth: usize) -> PResult<Expr> {
        let base = self.atom(depth)?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.unary(depth + 1)?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self, depth: usize) -> PResult<Expr> {
        let start = match self.peek() {
            None => return Err(ParseDiagnostic::error(self.src.len(), "unexpected end of input")),
            Some(_) => self.pos,
        };
        let c = self.src[start];
        if c == b'(' {
            self.pos += 1;
            let inner = self.expr(depth + 1)?;
            if self.peek() != Some(b')') {
                return Err(ParseDiagnostic::error(start, "unbalanced parentheses: missing ')'"));
            }
            self.pos += 1;
            return Ok(inner);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            return self.identifier(depth);
        }
        if c == b')' {
            return Err(ParseDiagnostic::error(start, "unbalanced parentheses: unexpected ')'"));
        }
        Err(ParseDiagnostic::error(start, format!("unexpected character '{}'", self.current_char())))
    }

    fn number(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ParseDiagnostic::error(start, "malformed number"));
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(ParseDiagnostic::error(save, "malformed exponent in number"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Const(v)),
            _ => Err(ParseDiagnostic::error(start, format!("number '{text}' is not a finite value"))),
        }
    }

    fn identifier(&mut self, depth: usize) -> PResult<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");

        if let Some(func) = Func::from_name(name) {
            if self.peek() != Some(b'(') {
                return Err(ParseDiagnostic::error(start, format!("function '{name}' must be followed by '('")));
            }
            let open = self.pos;
            self.pos += 1;
            let mut args = Vec::new();
            if self.peek() == Some(b')') {
                self.pos += 1;
            } else {
                loop {
                    args.push(self.expr(depth + 1)?);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(ParseDiagnostic::error(open, "unbalanced parentheses: missing ')'")),
                    }
                }
            }
            if args.len() != func.arity() {
                self.errors.push(ParseDiagnostic::error(
                    start,
                    format!("arity mismatch: '{name}' takes {} argument(s), got {}", func.arity(), args.len()),
                ));
                return Ok(Expr::Const(0.0));
            }
            if func == Func::Abs {
                self.warnings.push(ParseDiagnostic {
                    offset: start,
                    message: "abs is not smooth at 0; derivatives there are rejected".into(),
                    severity: Severity::Warning,
                });
            }
            return Ok(Expr::Call(func, args));
        }

        if name == "pi" {
            return Ok(Expr::Const(std::f64::consts::PI));
        }

        match self.vars {
            Variables::Indexed(n) => {
                if let Some(digits) = name.strip_prefix('x') {
                    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                        let index: usize = digits.parse().unwrap_or(usize::MAX);
                        if index == 0 || index > *n {
                            self.errors.push(ParseDiagnostic::error(
                                start,
                                format!("variable index out of range: '{name}' with dimension {n}"),
                            ));
                            return Ok(Expr::Const(0.0));
                        }
                        return Ok(Expr::Var(index - 1));
                    }
                }
            }
            Variables::Named(names) => {
                if let Some(i) = names.iter().position(|v| v == name) {
                    return Ok(Expr::Var(i));
                }
            }
        }
        self.errors.push(ParseDiagnostic::error(start, format!("unknown identifier '{name}'")));
        Ok(Expr::Const(0.0))
    }
}

/// Prints with the `x1, ..., xn` naming; re-parsing yields an equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                // operand of unary minus binds at least as tight as '-'
                if a.precedence() < 3 {
                    write!(f, "-({a})")
                } else {
                    write!(f, "-{a}")
                }
            }
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                let left_paren = match op {
                    BinOp::Pow => a.precedence() <= p,
                    _ => a.precedence() < p,
                };
                let right_paren = match op {
                    BinOp::Pow => b.precedence() < 3,
                    _ => b.precedence() <= p,
                };
                write_operand(f, a, left_paren)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, b, right_paren)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::point;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn var(i: usize) -> Box<Expr> {
        Box::new(Expr::Var(i))
    }

    #[test]
    fn sum_of_squares() {
        let e = parse("x1^2 + x2^2", 3).unwrap();
        let sq = |i| Expr::Binary(BinOp::Pow, var(i), Box::new(Expr::Const(2.0)));
        assert_eq!(e.ast(), &Expr::Binary(BinOp::Add, Box::new(sq(0)), Box::new(sq(1))));
    }

    #[test]
    fn call_over_division() {
        let e = parse("tanh(x1 / sqrt(2))", 1).unwrap();
        let expected = Expr::Call(
            Func::Tanh,
            vec![Expr::Binary(BinOp::Div, var(0), Box::new(Expr::Call(Func::Sqrt, vec![Expr::Const(2.0)])))],
        );
        assert_eq!(e.ast(), &expected);
    }

    #[test]
    fn out_of_range_variable() {
        let diags = parse("x4", 3).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].offset, 0);
        assert!(diags[0].message.contains("variable index out of range"));
    }

    #[test]
    fn error_cases_carry_offsets() {
        let d = parse("1 + foo(x1)", 1).unwrap_err();
        assert!(d[0].message.contains("unknown identifier"));
        assert_eq!(d[0].offset, 4);

        let d = parse("pow(x1)", 1).unwrap_err();
        assert!(d[0].message.contains("arity mismatch"));

        let d = parse("(x1 + 1", 1).unwrap_err();
        assert!(d[0].message.contains("unbalanced"));
        assert_eq!(d[0].offset, 0);

        let d = parse("x1 + 1)", 1).unwrap_err();
        assert!(d[0].message.contains("unbalanced"));
        assert_eq!(d[0].offset, 6);

        let d = parse("2 x1", 1).unwrap_err();
        assert_eq!(d[0].offset, 2);

        assert!(parse("", 1).is_err());
        assert!(parse("1e999", 1).is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("-x1^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
        let e = parse("2^3^2", 1).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 512.0);
        let e = parse("8 / 2 / 2 - 1 - 1", 1).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 0.0);
        let e = parse("x1^-1", 1).unwrap();
        assert_eq!(e.eval(&[4.0]).unwrap(), 0.25);
    }

    #[test]
    fn univariate_names() {
        let f = parse_univariate("s - s^3", "s").unwrap();
        assert_eq!(f.eval(&[2.0]).unwrap(), -6.0);
        assert!(parse_univariate("x1", "s").is_err());
    }

    #[test]
    fn product_jet() {
        let e = parse("x1*x2", 2).unwrap();
        let j = e.eval_jet(&point(&[2.0, 3.0]), 1).unwrap();
        assert_eq!(j.value(), 6.0);
        assert_eq!(j.gradient(), vec![3.0, 2.0]);
    }

    #[test]
    fn tanh_profile_jet() {
        let e = parse("tanh(x1/sqrt(2))", 1).unwrap();
        let j = e.eval_jet(&point(&[0.0]), 2).unwrap();
        assert_abs_diff_eq!(j.value(), 0.0);
        assert_abs_diff_eq!(j.derivative(&[1]), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(j.derivative(&[2]), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_sum_coefficients_match_finite_differences() {
        let e = parse("exp(x1+x2)", 2).unwrap();
        let j = e.eval_jet(&point(&[0.0, 0.0]), 3).unwrap();
        let f = |a: f64, b: f64| e.eval(&[a, b]).unwrap();
        let h = 1e-3;
        // oracle: central differences of the scalar evaluator
        let fxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        let fxx = (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h);
        let fxxy = (f(h, h) - 2.0 * f(0.0, h) + f(-h, h) - f(h, -h) + 2.0 * f(0.0, -h) - f(-h, -h)) / (2.0 * h * h * h);
        assert_abs_diff_eq!(j.derivative(&[1, 1]), fxy, epsilon = 1e-5);
        assert_abs_diff_eq!(j.derivative(&[2, 0]), fxx, epsilon = 1e-5);
        assert_abs_diff_eq!(j.derivative(&[2, 1]), fxxy, epsilon = 1e-5);
        for (alpha, c) in j.multi_indices().zip(j.coefficients()) {
            let fact: f64 = alpha.iter().map(|&k| (1..=k).map(f64::from).product::<f64>()).product();
            assert_abs_diff_eq!(*c, 1.0 / fact, epsilon = 1e-14);
        }
    }

    #[test]
    fn domain_violations() {
        let o = point(&[0.0]);
        assert!(matches!(parse("log(x1)", 1).unwrap().eval_jet(&o, 1), Err(Error::Domain { .. })));
        assert!(matches!(parse("sqrt(x1 - 1)", 1).unwrap().eval_jet(&o, 0), Err(Error::Domain { .. })));
        let abs = parse("abs(x1)", 1).unwrap();
        assert_eq!(abs.warnings().len(), 1);
        assert!(matches!(abs.eval_jet(&o, 1), Err(Error::NonSmooth { .. })));
        assert_eq!(abs.eval_jet(&o, 0).unwrap().value(), 0.0);
        assert_eq!(abs.eval_jet(&point(&[-2.0]), 2).unwrap().gradient(), vec![-1.0]);
    }

    #[test]
    fn grushin_power_is_smooth_for_negative_base() {
        let e = parse("pow(x1, 2)", 1).unwrap();
        let j = e.eval_jet(&point(&[-1.5]), 3).unwrap();
        assert_eq!(j.coefficients(), &[2.25, -3.0, 1.0, 0.0]);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..100).prop_map(|c| Expr::Const(f64::from(c) / 4.0)),
            (0usize..3).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone(), 0usize..5).prop_map(|(a, b, k)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][k];
                    Expr::Binary(op, Box::new(a), Box::new(b))
                }),
                (inner.clone(), 0usize..7).prop_map(|(a, k)| {
                    let f = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Tanh, Func::Sqrt, Func::Abs][k];
                    Expr::Call(f, vec![a])
                }),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Pow, vec![a, b])),
            ]
        })
    }

    fn arb_poly() -> impl Strategy<Value = String> {
        proptest::collection::vec((-3i32..=3, 0u32..3, 0u32..3, 0u32..3), 1..6).prop_map(|terms| {
            terms
                .iter()
                .map(|(c, a, b, d)| format!("({c}) * x1^{a} * x2^{b} * x3^{d}"))
                .collect::<Vec<_>>()
                .join(" + ")
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse(&printed, 3).unwrap_or_else(|d| panic!("{printed}: {d:?}"));
            prop_assert_eq!(reparsed.ast(), &e);
        }

        #[test]
        fn parsing_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let _ = parse_bytes(&bytes, 3);
        }

        #[test]
        fn parsing_is_total_on_grammar_soup(s in "[x0-9a-z+*/^(),. -]{0,40}") {
            if let Err(diags) = parse(&s, 3) {
                for d in diags {
                    prop_assert!(d.offset <= s.len());
                }
            }
        }

        #[test]
        fn polynomial_jets_match_divided_differences(
            src in arb_poly(),
            x in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let e = parse(&src, 3).unwrap();
            let p = point(&x);
            let j = e.eval_jet(&p, 2).unwrap();
            let f = |y: &[f64]| e.eval(y).unwrap();
            let h = 1e-4;
            for i in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let d1 = (f(&xp) - f(&xm)) / (2.0 * h);
                let d2 = (f(&xp) - 2.0 * f(&x) + f(&xm)) / (h * h);
                let mut a = [0u16; 3];
                a[i] = 1;
                let j1 = j.derivative(&a);
                a[i] = 2;
                let j2 = j.derivative(&a);
                prop_assert!((j1 - d1).abs() <= 1e-6 * (1.0 + j1.abs()), "{} vs {}", j1, d1);
                prop_assert!((j2 - d2).abs() <= 1e-4 * (1.0 + j2.abs()), "{} vs {}", j2, d2);
            }
        }
    }
}
