//! Expression language for potentials: a recursive-descent parser producing a
//! small tree that evaluates over complex numbers or dual numbers.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'x' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := sech | tanh | exp | sin | cos | sqrt
//! ```
//!
//! Exponents must be constant integers. `×`, `÷` and `−` are accepted as
//! synonyms for `*`, `/` and `-`.

use crate::numerics::dual::{sech_stable, tanh_stable, Dual};
use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sech,
    Tanh,
    Exp,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sech" => Func::Sech,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sech => "sech",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    X,
    Num(f64),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("exponent at offset {offset} is not a constant integer")]
    NonIntegerExponent { offset: usize },
}

/// Scalar types an expression can be evaluated over.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn apply(self, f: Func) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Scalar for Complex64 {
    fn constant(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }

    fn apply(self, f: Func) -> Self {
        match f {
            Func::Sech => sech_stable(self),
            Func::Tanh => tanh_stable(self),
            Func::Exp => self.exp(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Sqrt => self.sqrt(),
        }
    }

    fn powi(self, n: i32) -> Self {
        Complex64::powi(&self, n)
    }
}

impl Scalar for Dual {
    fn constant(v: f64) -> Self {
        Dual::constant(Complex64::new(v, 0.0))
    }

    fn apply(self, f: Func) -> Self {
        match f {
            Func::Sech => self.sech(),
            Func::Tanh => self.tanh(),
            Func::Exp => self.exp(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Sqrt => self.sqrt(),
        }
    }

    fn powi(self, n: i32) -> Self {
        Dual::powi(self, n)
    }
}

impl Expr {
    pub fn eval<S: Scalar>(&self, x: S) -> S {
        match self {
            Expr::X => x,
            Expr::Num(v) => S::constant(*v),
            // 0 - a rather than -a keeps Im = +0 for negated real literals
            Expr::Neg(a) => S::constant(0.0) - a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, n) => a.eval(x).powi(*n),
            Expr::Call(f, a) => a.eval(x).apply(*f),
        }
    }

    fn has_x(&self) -> bool {
        match self {
            Expr::X => true,
            Expr::Num(_) => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.has_x(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.has_x() || b.has_x(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::X => write!(f, "x"),
            Expr::Num(v) if v.is_sign_negative() => write!(f, "({v:?})"),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "({a}^({n}))"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
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
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
}

impl Lexer {
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.chars.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' | '−' => Some(Tok::Minus),
            '*' | '×' | '·' => Some(Tok::Star),
            '/' | '÷' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == '.' {
            let mut end = self.pos;
            while end < self.chars.len() && (self.chars[end].is_ascii_digit() || self.chars[end] == '.') {
                end += 1;
            }
            if end < self.chars.len() && (self.chars[end] == 'e' || self.chars[end] == 'E') {
                let mut k = end + 1;
                if k < self.chars.len() && (self.chars[k] == '+' || self.chars[k] == '-') {
                    k += 1;
                }
                if k < self.chars.len() && self.chars[k].is_ascii_digit() {
                    while k < self.chars.len() && self.chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text: String = self.chars[start..end].iter().collect();
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number '{text}'"),
            })?;
            self.pos = end;
            return Ok((Tok::Num(v), start));
        }
        if c.is_alphabetic() || c == '_' {
            let mut end = self.pos;
            while end < self.chars.len() && (self.chars[end].is_alphanumeric() || self.chars[end] == '_') {
                end += 1;
            }
            let text: String = self.chars[start..end].iter().collect();
            self.pos = end;
            return Ok((Tok::Ident(text), start));
        }
        Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character '{c}'"),
        })
    }
}

struct Parser {
    lexer: Lexer,
    tok: Tok,
    at: usize,
}

impl Parser {
    fn advance(&mut self) -> Result<(), ParseError> {
        let (t, at) = self.lexer.next()?;
        self.tok = t;
        self.at = at;
        Ok(())
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.tok == want {
            self.advance()
        } else {
            Err(ParseError::Syntax {
                offset: self.at,
                message: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.advance()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.advance()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.advance()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.advance()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Minus {
            self.advance()?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.advance()?;
        let at = self.at;
        let exponent = self.unary()?;
        if exponent.has_x() {
            return Err(ParseError::NonIntegerExponent { offset: at });
        }
        let v: Complex64 = exponent.eval(Complex64::new(0.0, 0.0));
        if v.im != 0.0 || v.re.fract() != 0.0 || v.re.abs() > 1024.0 {
            return Err(ParseError::NonIntegerExponent { offset: at });
        }
        Ok(Expr::Pow(Box::new(base), v.re as i32))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.advance()?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.advance()?;
                match name.as_str() {
                    "x" => Ok(Expr::X),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    _ => {
                        let Some(func) = Func::from_name(&name) else {
                            return Err(ParseError::UnknownIdentifier { name, offset: at });
                        };
                        self.expect(Tok::LParen, "'(' after function name")?;
                        let arg = self.expr()?;
                        self.expect(Tok::RParen, "')'")?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                }
            }
            Tok::End => Err(ParseError::Syntax {
                offset: self.at,
                message: "unexpected end of input".into(),
            }),
            t => Err(ParseError::Syntax {
                offset: self.at,
                message: format!("unexpected token {t:?}"),
            }),
        }
    }
}

/// Parses `text` into an expression tree. Offsets in errors count characters.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        lexer: Lexer {
            chars: text.chars().collect(),
            pos: 0,
        },
        tok: Tok::End,
        at: 0,
    };
    p.advance()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(ParseError::Syntax {
            offset: p.at,
            message: "trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(text: &str, x: f64) -> f64 {
        parse(text).unwrap().eval(Complex64::new(x, 0.0)).re
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(ev("-x^2", 3.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(ev("x^-1", 4.0), 0.25);
        assert_eq!(ev("2 × 3 ÷ 4 − 1", 0.0), 0.5);
    }

    #[test]
    fn functions() {
        assert!((ev("sech(x)", 0.0) - 1.0).abs() < 1e-15);
        assert!((ev("sqrt(x) * exp(0) + sin(0) + cos(0) - tanh(0)", 4.0) - 3.0).abs() < 1e-15);
        assert!((ev("1.5e-1 * 2", 0.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn unbalanced_parenthesis_reports_end_offset() {
        match parse("sech(x") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        assert!(matches!(parse("cosh(x)"), Err(ParseError::UnknownIdentifier { offset: 0, .. })));
        assert!(matches!(parse("2*y"), Err(ParseError::UnknownIdentifier { offset: 2, .. })));
    }

    #[test]
    fn exponent_must_be_integer() {
        assert!(matches!(parse("x^2.5"), Err(ParseError::NonIntegerExponent { offset: 2 })));
        assert!(matches!(parse("x^x"), Err(ParseError::NonIntegerExponent { .. })));
        assert!(parse("x^(4/2)").is_ok());
    }

    #[test]
    fn stray_tokens() {
        assert!(matches!(parse("1 +"), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("(x))"), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("x $ 2"), Err(ParseError::Syntax { offset: 2, .. })));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![Just(Expr::X), (-3.0f64..3.0).prop_map(Expr::Num)];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                (inner.clone(), -3i32..4).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
                (inner, 0usize..6).prop_map(|(a, k)| {
                    let f = [Func::Sech, Func::Tanh, Func::Exp, Func::Sin, Func::Cos, Func::Sqrt][k];
                    Expr::Call(f, Box::new(a))
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr(), xs in prop::collection::vec((-2.0f64..2.0, -0.5f64..0.5), 100)) {
            let printed = e.to_string();
            let back = parse(&printed).unwrap();
            for (re, im) in xs {
                let z = Complex64::new(re, im);
                let a = e.eval(z);
                let b = back.eval(z);
                prop_assert!(a == b || (a.re.is_nan() || a.im.is_nan()) && (b.re.is_nan() || b.im.is_nan()),
                    "{printed}: {a} vs {b}");
            }
        }
    }
}
