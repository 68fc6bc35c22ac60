//! Coordinate-function expressions.
//!
//! Grammar (standard infix precedence, left-associative binary operators):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' '-'? INTEGER | '^' '(' '-'? INTEGER ')')?
//! primary := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'
//! FUNC    := sin | cos | exp
//! ```
//!
//! Exponents are integer literals only, so every expression is smooth wherever
//! it is defined and forward-mode differentiation is exact.

mod jet;

pub use jet::Jet;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at column {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("duplicate coordinate name `{0}`")]
    DuplicateCoordinate(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("point has dimension {got}, expression expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
    #[error("point has non-finite coordinate {0}")]
    NonFinitePoint(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        match s {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

/// A point of a chart: finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, EvalError> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(EvalError::NonFinitePoint(i));
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl std::ops::Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A parsed expression bound to the coordinate names of its chart.
#[derive(Debug, Clone)]
pub struct ScalarExpr {
    root: Node,
    coords: Arc<[String]>,
}

impl PartialEq for ScalarExpr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.coords == other.coords
    }
}

impl ScalarExpr {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn constant(value: f64, coords: Arc<[String]>) -> Self {
        let root = if value < 0.0 {
            Node::Neg(Box::new(Node::Const(-value)))
        } else {
            Node::Const(value)
        };
        ScalarExpr { root, coords }
    }

    pub fn is_zero_constant(&self) -> bool {
        matches!(self.root, Node::Const(c) if c == 0.0)
    }

    /// Value only.
    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        self.check_dim(p)?;
        let v = eval_value(&self.root, p)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Value, gradient and Hessian by forward-mode differentiation.
    pub fn eval_jet2(&self, p: &[f64]) -> Result<Jet, EvalError> {
        self.check_dim(p)?;
        let j = eval_jet(&self.root, p)?;
        if j.is_finite() {
            Ok(j)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn check_dim(&self, p: &[f64]) -> Result<(), EvalError> {
        if p.len() != self.coords.len() {
            return Err(EvalError::DimensionMismatch {
                expected: self.coords.len(),
                got: p.len(),
            });
        }
        Ok(())
    }
}

/// Parse `source` against the coordinate names `coords`.
pub fn parse_expr(source: &str, coords: &[String]) -> Result<ScalarExpr, ParseError> {
    parse_with(source, coords_arc(coords)?)
}

/// Validate coordinate names once and share them between expressions.
pub fn coords_arc(coords: &[String]) -> Result<Arc<[String]>, ParseError> {
    for (i, c) in coords.iter().enumerate() {
        if coords[..i].contains(c) {
            return Err(ParseError::DuplicateCoordinate(c.clone()));
        }
    }
    Ok(coords.to_vec().into())
}

pub fn parse_with(source: &str, coords: Arc<[String]>) -> Result<ScalarExpr, ParseError> {
    let tokens = tokenize(source)?;
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        coords: &coords,
        end: source.chars().count(),
    };
    let root = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError::Syntax {
            pos: tok.pos,
            msg: format!("unexpected {}", tok.kind),
        });
    }
    Ok(ScalarExpr { root, coords })
}

fn eval_value(node: &Node, p: &[f64]) -> Result<f64, EvalError> {
    Ok(match node {
        Node::Const(c) => *c,
        Node::Var(i) => p[*i],
        Node::Neg(a) => -eval_value(a, p)?,
        Node::Binary(op, a, b) => {
            let (a, b) = (eval_value(a, p)?, eval_value(b, p)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    a / b
                }
            }
        }
        Node::Pow(a, k) => {
            let a = eval_value(a, p)?;
            if *k < 0 && a == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            a.powi(*k)
        }
        Node::Call(f, a) => {
            let a = eval_value(a, p)?;
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
            }
        }
    })
}

fn eval_jet(node: &Node, p: &[f64]) -> Result<Jet, EvalError> {
    let n = p.len();
    Ok(match node {
        Node::Const(c) => Jet::constant(*c, n),
        Node::Var(i) => Jet::variable(p[*i], *i, n),
        Node::Neg(a) => -eval_jet(a, p)?,
        Node::Binary(op, a, b) => {
            let (a, b) = (eval_jet(a, p)?, eval_jet(b, p)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.value == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    a * b.recip()
                }
            }
        }
        Node::Pow(a, k) => {
            let a = eval_jet(a, p)?;
            if *k < 0 && a.value == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            a.powi(*k)
        }
        Node::Call(f, a) => {
            let a = eval_jet(a, p)?;
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
            }
        }
    })
}

// ---------------------------------------------------------------------------
// printing

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
        Node::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
        Node::Neg(_) => PREC_NEG,
        Node::Const(c) if *c < 0.0 => PREC_NEG,
        Node::Pow(..) => PREC_POW,
        _ => PREC_ATOM,
    }
}

struct Printer<'a> {
    node: &'a Node,
    coords: &'a [String],
}

impl Printer<'_> {
    fn child<'b>(&'b self, node: &'b Node) -> Printer<'b> {
        Printer {
            node,
            coords: self.coords,
        }
    }

    fn wrapped(&self, f: &mut fmt::Formatter<'_>, node: &Node, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({})", self.child(node))
        } else {
            write!(f, "{}", self.child(node))
        }
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Node::Const(c) if *c < 0.0 => write!(f, "-{}", -c),
            Node::Const(c) => write!(f, "{}", c),
            Node::Var(i) => f.write_str(&self.coords[*i]),
            Node::Neg(a) => {
                f.write_str("-")?;
                self.wrapped(f, a, precedence(a) < PREC_NEG)
            }
            Node::Binary(op, a, b) => {
                let prec = precedence(self.node);
                self.wrapped(f, a, precedence(a) < prec)?;
                f.write_str(match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                })?;
                self.wrapped(f, b, precedence(b) <= prec)
            }
            Node::Pow(a, k) => {
                self.wrapped(f, a, precedence(a) < PREC_ATOM)?;
                write!(f, "^{}", k)
            }
            Node::Call(func, a) => write!(f, "{}({})", func.name(), self.child(a)),
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer {
            node: &self.root,
            coords: &self.coords,
        }
        .fmt(f)
    }
}

// ---------------------------------------------------------------------------
// lexing / parsing

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Num(n) => write!(f, "number {}", n),
            TokKind::Ident(s) => write!(f, "identifier `{}`", s),
            TokKind::Op(c) => write!(f, "`{}`", c),
            TokKind::LParen => f.write_str("`(`"),
            TokKind::RParen => f.write_str("`)`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part: e/E followed by optional sign and digits
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("malformed number `{}`", text),
            })?;
            out.push(Token {
                kind: TokKind::Num(value),
                pos: start,
            });
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(chars[start..i].iter().collect()),
                pos: start,
            });
        } else {
            let kind = match c {
                '+' | '-' | '*' | '/' | '^' => TokKind::Op(c),
                '(' => TokKind::LParen,
                ')' => TokKind::RParen,
                _ => {
                    return Err(ParseError::Syntax {
                        pos: start,
                        msg: format!("unexpected character `{}`", c),
                    })
                }
            };
            out.push(Token { kind, pos: start });
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    coords: &'a [String],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn peek_op(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { kind: TokKind::Op(o), .. }) if *o == c)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token {
                kind: TokKind::RParen, ..
            }) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected `)`"),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.peek_op('+') {
                BinOp::Add
            } else if self.peek_op('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek_op('*') {
                BinOp::Mul
            } else if self.peek_op('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek_op('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if !self.peek_op('^') {
            return Ok(base);
        }
        self.pos += 1;
        let parenthesised = matches!(
            self.peek(),
            Some(Token {
                kind: TokKind::LParen,
                ..
            })
        );
        if parenthesised {
            self.pos += 1;
        }
        let negative = self.peek_op('-');
        if negative {
            self.pos += 1;
        }
        let pos = self.here();
        let k = match self.next() {
            Some(Token {
                kind: TokKind::Num(v), ..
            }) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i32,
            _ => {
                return Err(ParseError::Syntax {
                    pos,
                    msg: "exponent must be an integer literal".into(),
                })
            }
        };
        if parenthesised {
            self.expect_rparen()?;
        }
        Ok(Node::Pow(Box::new(base), if negative { -k } else { k }))
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let tok = match self.next() {
            Some(t) => t,
            None => {
                return Err(ParseError::Syntax {
                    pos: self.end,
                    msg: "unexpected end of input".into(),
                })
            }
        };
        match tok.kind {
            TokKind::Num(v) => Ok(Node::Const(v)),
            TokKind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokKind::Ident(name) => {
                let is_call = matches!(
                    self.peek(),
                    Some(Token {
                        kind: TokKind::LParen,
                        ..
                    })
                );
                if is_call {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownIdentifier {
                        name: name.clone(),
                        pos: tok.pos,
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Node::Call(func, Box::new(arg)))
                } else if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    Ok(Node::Var(i))
                } else {
                    Err(ParseError::UnknownIdentifier { name, pos: tok.pos })
                }
            }
            other => Err(ParseError::Syntax {
                pos: tok.pos,
                msg: format!("unexpected {}", other),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_constant_zero() {
        let e = parse_expr("0", &names(&["x"])).unwrap();
        assert_eq!(e.root(), &Node::Const(0.0));
    }

    #[test]
    fn parses_example_map_component() {
        let c = names(&["x1", "x2", "y1", "y2", "z"]);
        let e = parse_expr("y1*y1/2 + y2*y2/2 + z", &c).unwrap();
        let y1 = || Box::new(Node::Var(2));
        let y2 = || Box::new(Node::Var(3));
        let half = |a: Box<Node>, b: Box<Node>| {
            Node::Binary(
                BinOp::Div,
                Box::new(Node::Binary(BinOp::Mul, a, b)),
                Box::new(Node::Const(2.0)),
            )
        };
        let expected = Node::Binary(
            BinOp::Add,
            Box::new(Node::Binary(
                BinOp::Add,
                Box::new(half(y1(), y1())),
                Box::new(half(y2(), y2())),
            )),
            Box::new(Node::Var(4)),
        );
        assert_eq!(e.root(), &expected);
        let v = e.eval(&[0.0, 0.0, 0.5, -1.0, 2.0]).unwrap();
        assert!((v - (0.125 + 0.5 + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn dangling_operator_is_a_syntax_error() {
        let err = parse_expr("q +", &names(&["q"])).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_identifier_reports_position() {
        let err = parse_expr("x + w", &names(&["x"])).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "w".into(),
                pos: 4
            }
        );
        let err = parse_expr("tan(x)", &names(&["x"])).unwrap_err();
        assert!(matches!(err, ParseError::UnknownIdentifier { .. }));
    }

    #[test]
    fn rejects_duplicate_coords_and_empty_source() {
        assert!(matches!(
            parse_expr("x", &names(&["x", "x"])),
            Err(ParseError::DuplicateCoordinate(_))
        ));
        assert_eq!(parse_expr("   ", &names(&["x"])), Err(ParseError::Empty));
    }

    #[test]
    fn non_integer_exponent_rejected() {
        assert!(parse_expr("x^1.5", &names(&["x"])).is_err());
        assert!(parse_expr("x^y", &names(&["x", "y"])).is_err());
        assert!(parse_expr("x^-2", &names(&["x"])).is_ok());
        assert!(parse_expr("x^(-2)", &names(&["x"])).is_ok());
    }

    #[test]
    fn precedence_and_associativity() {
        let c = names(&["a", "b", "c"]);
        let p = [2.0, 3.0, 5.0];
        let v = |s: &str| parse_expr(s, &c).unwrap().eval(&p).unwrap();
        assert_eq!(v("a - b - c"), -6.0);
        assert_eq!(v("a / b * c"), 2.0 / 3.0 * 5.0);
        assert_eq!(v("-a^2"), -4.0);
        assert_eq!(v("(-a)^2"), 4.0);
        assert_eq!(v("a + b*c"), 17.0);
        assert_eq!(v("2e-1*c"), 1.0);
    }

    #[test]
    fn constant_jet() {
        let e = parse_expr("7", &names(&["x", "y"])).unwrap();
        let j = e.eval_jet2(&[0.3, -2.0]).unwrap();
        assert_eq!(j.value, 7.0);
        assert_eq!(j.gradient, vec![0.0, 0.0]);
        assert_eq!(j.hessian.unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn polynomial_jet() {
        let e = parse_expr("x^2*y", &names(&["x", "y"])).unwrap();
        let j = e.eval_jet2(&[2.0, 3.0]).unwrap();
        assert_eq!(j.value, 12.0);
        assert_eq!(j.gradient, vec![12.0, 4.0]);
        assert_eq!(j.hessian.unwrap(), vec![6.0, 4.0, 4.0, 0.0]);
    }

    #[test]
    fn division_by_zero_surfaces_at_evaluation() {
        let e = parse_expr("1/x", &names(&["x"])).unwrap();
        assert_eq!(e.eval_jet2(&[0.0]), Err(EvalError::DivisionByZero));
        assert_eq!(e.eval(&[0.0]), Err(EvalError::DivisionByZero));
        let e = parse_expr("x^-1", &names(&["x"])).unwrap();
        assert_eq!(e.eval_jet2(&[0.0]), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn overflow_is_a_domain_error() {
        let e = parse_expr("exp(x)", &names(&["x"])).unwrap();
        assert_eq!(e.eval(&[1000.0]), Err(EvalError::NonFinite));
    }

    #[test]
    fn dimension_mismatch() {
        let e = parse_expr("x", &names(&["x"])).unwrap();
        assert!(matches!(
            e.eval_jet2(&[1.0, 2.0]),
            Err(EvalError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn printing_is_stable() {
        let c = names(&["x", "y", "z"]);
        for src in [
            "x - (y - z)",
            "-(x + y)*z",
            "x/(y*z)",
            "(x^2)^3",
            "sin(x)^2 + cos(-y)",
            "--x",
            "x*-y",
            "(-x)^3 - exp(x/2)",
            "0.25*(x - y*z)",
        ] {
            let e = parse_expr(src, &c).unwrap();
            let printed = e.to_string();
            let again = parse_expr(&printed, &c).unwrap();
            assert_eq!(again.root(), e.root(), "{src} -> {printed}");
            assert_eq!(again.to_string(), printed);
        }
    }

    #[test]
    fn point_rejects_nan() {
        assert!(Point::new(vec![0.0, f64::NAN]).is_err());
    }
}
