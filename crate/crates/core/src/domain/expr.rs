//! A small arithmetic expression language for coefficient and kernel
//! functions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := number | var | 'pi' | func '(' expr (',' expr)* ')' | '(' expr ')' | '-' factor
//! func   := sin | cos | exp | sqrt | abs | min | max
//! ```
//!
//! `var` is `x`, plus `y` when parsing two-variable kernel expressions.
//! The Unicode minus sign `−` is accepted wherever `-` is.

use std::fmt;

use crate::domain::grid::{Field, Grid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            Func::Min | Func::Max => n >= 2,
            _ => n == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Parses a single-variable expression in `x`.
    pub fn parse(src: &str) -> Result<Self> {
        Parser::new(src, false).parse_all()
    }

    /// Parses a two-variable expression in `x` and `y` (kernels).
    pub fn parse_xy(src: &str) -> Result<Self> {
        Parser::new(src, true).parse_all()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_xy(x, 0.0)
    }

    pub fn eval_xy(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(e) => -e.eval_xy(x, y),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval_xy(x, y), b.eval_xy(x, y));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Call(f, args) => {
                let mut vals = args.iter().map(|a| a.eval_xy(x, y));
                match f {
                    Func::Sin => vals.next().unwrap_or(f64::NAN).sin(),
                    Func::Cos => vals.next().unwrap_or(f64::NAN).cos(),
                    Func::Exp => vals.next().unwrap_or(f64::NAN).exp(),
                    Func::Sqrt => vals.next().unwrap_or(f64::NAN).sqrt(),
                    Func::Abs => vals.next().unwrap_or(f64::NAN).abs(),
                    Func::Min => vals.fold(f64::INFINITY, f64::min),
                    Func::Max => vals.fold(f64::NEG_INFINITY, f64::max),
                }
            }
        }
    }

    pub fn uses_y(&self) -> bool {
        match self {
            Expr::Y => true,
            Expr::Num(_) | Expr::X => false,
            Expr::Neg(e) => e.uses_y(),
            Expr::Bin(_, a, b) => a.uses_y() || b.uses_y(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_y),
        }
    }

    /// Samples the expression at every grid node; non-finite values are
    /// reported with the offending node.
    pub fn eval_field(&self, grid: &Grid) -> Result<Field> {
        grid.nodes()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let v = self.eval(x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Evaluation {
                        node: i,
                        x,
                        message: format!("expression `{self}` evaluates to {v}"),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Field)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => f.write_str("x"),
            Expr::Y => f.write_str("y"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    peeked: Option<(usize, Tok)>,
    allow_y: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, allow_y: bool) -> Self {
        Self {
            src,
            pos: 0,
            peeked: None,
            allow_y,
        }
    }

    fn err(offset: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }

    fn lex(&mut self) -> Result<(usize, Tok)> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((start, Tok::End));
        };
        let single = |tok| Ok((start, tok));
        self.pos += c.len_utf8();
        match c {
            '+' => single(Tok::Plus),
            '-' | '\u{2212}' => single(Tok::Minus),
            '*' => single(Tok::Star),
            '/' => single(Tok::Slash),
            '(' => single(Tok::LParen),
            ')' => single(Tok::RParen),
            ',' => single(Tok::Comma),
            c if c.is_ascii_digit() || c == '.' => {
                let mut end = start;
                let b = bytes;
                while end < b.len() && (b[end].is_ascii_digit() || b[end] == b'.') {
                    end += 1;
                }
                if end < b.len() && (b[end] == b'e' || b[end] == b'E') {
                    let mut k = end + 1;
                    if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
                        k += 1;
                    }
                    if k < b.len() && b[k].is_ascii_digit() {
                        while k < b.len() && b[k].is_ascii_digit() {
                            k += 1;
                        }
                        end = k;
                    }
                }
                self.pos = end;
                let text = &self.src[start..end];
                text.parse::<f64>()
                    .map(|v| (start, Tok::Num(v)))
                    .map_err(|_| Self::err(start, format!("malformed number `{text}`")))
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = start;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                self.pos = end;
                Ok((start, Tok::Ident(self.src[start..end].to_string())))
            }
            other => Err(Self::err(start, format!("unexpected character `{other}`"))),
        }
    }

    fn peek(&mut self) -> Result<&(usize, Tok)> {
        if self.peeked.is_none() {
            let t = self.lex()?;
            self.peeked = Some(t);
        }
        Ok(self.peeked.as_ref().expect("peeked"))
    }

    fn next(&mut self) -> Result<(usize, Tok)> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lex(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let (off, tok) = self.next()?;
        if tok == want {
            Ok(())
        } else {
            Err(Self::err(off, format!("expected {what}")))
        }
    }

    fn parse_all(mut self) -> Result<Expr> {
        let e = self.expr()?;
        let (off, tok) = self.next()?;
        if tok != Tok::End {
            return Err(Self::err(off, "unexpected trailing input"));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek()?.1 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next()?;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek()?.1 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.next()?;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let (off, tok) = self.next()?;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.factor()?))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X),
                "y" if self.allow_y => Ok(Expr::Y),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                _ => {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(Self::err(off, format!("unknown identifier `{name}`")));
                    };
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let mut args = vec![self.expr()?];
                    loop {
                        let (o, t) = self.next()?;
                        match t {
                            Tok::Comma => args.push(self.expr()?),
                            Tok::RParen => break,
                            _ => return Err(Self::err(o, "expected `,` or `)`")),
                        }
                    }
                    if !func.arity_ok(args.len()) {
                        return Err(Self::err(
                            off,
                            format!("wrong number of arguments ({}) for `{}`", args.len(), name),
                        ));
                    }
                    Ok(Expr::Call(func, args))
                }
            },
            Tok::End => Err(Self::err(off, "unexpected end of input")),
            _ => Err(Self::err(off, "expected a number, variable, function or `(`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_expression() {
        let e = Expr::parse("2+cos(2*pi*x)").unwrap();
        assert_eq!(e.eval(0.0), 3.0);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = Expr::parse("1 - 2*3 + -x/4").unwrap();
        assert_eq!(e.eval(2.0), 1.0 - 6.0 - 0.5);
        let e = Expr::parse("−(1+x) * −2").unwrap();
        assert_eq!(e.eval(1.0), 4.0);
        assert_eq!(Expr::parse("2 - 3 - 4").unwrap().eval(0.0), -5.0);
        assert_eq!(Expr::parse("8 / 4 / 2").unwrap().eval(0.0), 1.0);
    }

    #[test]
    fn numbers_with_exponents() {
        assert_eq!(Expr::parse("1e-3").unwrap().eval(0.0), 1e-3);
        assert_eq!(Expr::parse("2.5E2*x").unwrap().eval(2.0), 500.0);
        assert_eq!(Expr::parse(".5").unwrap().eval(0.0), 0.5);
    }

    #[test]
    fn min_max_functions() {
        let e = Expr::parse("max(x, 1 - x, 0.2)").unwrap();
        assert_eq!(e.eval(0.3), 0.7);
        let e = Expr::parse("min(abs(x), sqrt(4))").unwrap();
        assert_eq!(e.eval(-5.0), 2.0);
        assert!(Expr::parse("min(x)").is_err());
        assert!(Expr::parse("sin(x, 1)").is_err());
    }

    #[test]
    fn unknown_identifier_is_a_parse_error() {
        match Expr::parse("foo(x)") {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 0);
                assert!(message.contains("foo"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(Expr::parse("x + y").is_err());
        assert!(Expr::parse_xy("x + y").is_ok());
    }

    #[test]
    fn reports_offset_of_first_error() {
        match Expr::parse("1 + (2 * ") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 9),
            other => panic!("unexpected {other:?}"),
        }
        match Expr::parse("1 + 2)") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
        match Expr::parse("3 $ 4") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn division_by_zero_at_node_is_reported() {
        let g = Grid::midpoint(2, 0.0, 1.0).unwrap();
        let e = Expr::parse("1/ (x-0.25)").unwrap();
        match e.eval_field(&g) {
            Err(Error::Evaluation { node, .. }) => assert_eq!(node, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn eval_field_examples() {
        let g = Grid::midpoint(2, 0.0, 1.0).unwrap();
        assert_eq!(Expr::parse("x").unwrap().eval_field(&g).unwrap().0, vec![0.25, 0.75]);
        assert_eq!(Expr::parse("0").unwrap().eval_field(&g).unwrap().0, vec![0.0, 0.0]);
        let g4 = Grid::midpoint(4, 0.0, 1.0).unwrap();
        let f = Expr::parse("sqrt(x)").unwrap().eval_field(&g4).unwrap();
        for (v, want) in f.iter().zip([0.3536, 0.6124, 0.7906, 0.9354]) {
            assert!((v - want).abs() < 1e-4);
        }
    }

    #[test]
    fn display_round_trips_semantics() {
        let e = Expr::parse("max(1, x) - 2/(3+x)*sin(pi*x)").unwrap();
        let back = Expr::parse(&e.to_string()).unwrap();
        for x in [0.1, 0.5, 2.0] {
            assert!((e.eval(x) - back.eval(x)).abs() < 1e-12);
        }
    }
}
