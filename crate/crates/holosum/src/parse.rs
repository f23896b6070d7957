//! Parser for polynomial and rational-function expressions.
//!
//! Accepts ordinary arithmetic notation (`+ - * / ^`, parentheses, integer
//! literals, variable names from a [`VarTable`]); whitespace is
//! insignificant.  The canonical `Display` forms of [`MPoly`] and
//! [`RatFun`] are valid inputs, giving bit-exact round-trips.  Errors
//! report the character position of the offending token.
//!
//! The grammar core is generic over an [`Atoms`] value-builder so other
//! modules (operator expressions, summand expressions) reuse the same
//! lexing and precedence rules with their own semantics, including
//! noncommutative products.

use std::sync::Arc;

use num::bigint::BigInt;
use num::rational::BigRational;
use thiserror::Error;

use crate::mpoly::MPoly;
use crate::ratfun::RatFun;
use crate::vars::VarTable;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at position {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

pub(crate) fn err<T>(pos: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        pos,
        msg: msg.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexer {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end_pos: usize,
}

impl Lexer {
    fn new(input: &str) -> Result<Lexer, ParseError> {
        let mut toks = Vec::new();
        let chars: Vec<char> = input.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = i;
            match c {
                ' ' | '\t' | '\n' | '\r' => {
                    i += 1;
                }
                '+' => {
                    toks.push((pos, Tok::Plus));
                    i += 1;
                }
                '-' => {
                    toks.push((pos, Tok::Minus));
                    i += 1;
                }
                '*' => {
                    toks.push((pos, Tok::Star));
                    i += 1;
                }
                '/' => {
                    toks.push((pos, Tok::Slash));
                    i += 1;
                }
                '^' => {
                    toks.push((pos, Tok::Caret));
                    i += 1;
                }
                '(' => {
                    toks.push((pos, Tok::LParen));
                    i += 1;
                }
                ')' => {
                    toks.push((pos, Tok::RParen));
                    i += 1;
                }
                ',' => {
                    toks.push((pos, Tok::Comma));
                    i += 1;
                }
                '0'..='9' => {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    let val = BigInt::parse_bytes(s.as_bytes(), 10)
                        .ok_or_else(|| ParseError {
                            pos,
                            msg: format!("bad integer literal {s:?}"),
                        })?;
                    toks.push((pos, Tok::Int(val)));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len()
                        && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                    {
                        i += 1;
                    }
                    toks.push((pos, Tok::Name(chars[start..i].iter().collect())));
                }
                other => return err(pos, format!("unexpected character {other:?}")),
            }
        }
        Ok(Lexer {
            toks,
            at: 0,
            end_pos: chars.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks
            .get(self.at)
            .map(|(p, _)| *p)
            .unwrap_or(self.end_pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => err(pos, format!("expected {what}, found {t:?}")),
            None => err(pos, format!("expected {what}, found end of input")),
        }
    }
}

/// Value builder plugged into the generic expression grammar.  Operations
/// receive the source position where failure should be reported.
pub(crate) trait Atoms {
    type Node;
    fn number(&self, n: BigInt) -> Self::Node;
    fn name(&self, name: &str, pos: usize) -> Result<Self::Node, ParseError>;
    /// Function-call syntax `name(arg, ...)`; grammars without functions
    /// keep the default error.
    fn call(
        &self,
        name: &str,
        pos: usize,
        _args: Vec<Self::Node>,
    ) -> Result<Self::Node, ParseError> {
        err(pos, format!("unknown function {name:?}"))
    }
    fn add(&self, a: Self::Node, b: Self::Node, pos: usize) -> Result<Self::Node, ParseError>;
    fn sub(&self, a: Self::Node, b: Self::Node, pos: usize) -> Result<Self::Node, ParseError>;
    fn mul(&self, a: Self::Node, b: Self::Node, pos: usize) -> Result<Self::Node, ParseError>;
    fn div(&self, a: Self::Node, b: Self::Node, pos: usize) -> Result<Self::Node, ParseError>;
    fn pow(&self, a: Self::Node, e: i32, pos: usize) -> Result<Self::Node, ParseError>;
    fn neg(&self, a: Self::Node) -> Self::Node;
}

pub(crate) struct ExprParser<'a, A: Atoms> {
    lex: Lexer,
    atoms: &'a A,
}

impl<'a, A: Atoms> ExprParser<'a, A> {
    /// Parses a complete expression (no trailing input allowed).
    pub(crate) fn parse(input: &str, atoms: &'a A) -> Result<A::Node, ParseError> {
        let mut p = ExprParser {
            lex: Lexer::new(input)?,
            atoms,
        };
        let e = p.expr()?;
        if p.lex.peek().is_some() {
            return err(p.lex.pos(), "trailing input after expression");
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<A::Node, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.lex.peek() {
                Some(Tok::Plus) => {
                    let pos = self.lex.pos();
                    self.lex.bump();
                    let t = self.term()?;
                    acc = self.atoms.add(acc, t, pos)?;
                }
                Some(Tok::Minus) => {
                    let pos = self.lex.pos();
                    self.lex.bump();
                    let t = self.term()?;
                    acc = self.atoms.sub(acc, t, pos)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<A::Node, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.lex.peek() {
                Some(Tok::Star) => {
                    let pos = self.lex.pos();
                    self.lex.bump();
                    let f = self.factor()?;
                    acc = self.atoms.mul(acc, f, pos)?;
                }
                Some(Tok::Slash) => {
                    let pos = self.lex.pos();
                    self.lex.bump();
                    let d = self.factor()?;
                    acc = self.atoms.div(acc, d, pos)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<A::Node, ParseError> {
        match self.lex.peek() {
            Some(Tok::Minus) => {
                self.lex.bump();
                let f = self.factor()?;
                Ok(self.atoms.neg(f))
            }
            Some(Tok::Plus) => {
                self.lex.bump();
                self.factor()
            }
            _ => {
                let base = self.atom()?;
                if let Some(Tok::Caret) = self.lex.peek() {
                    self.lex.bump();
                    let (pos, e) = self.signed_int()?;
                    let e32: i32 = e.try_into().map_err(|_| ParseError {
                        pos,
                        msg: "exponent out of range".into(),
                    })?;
                    self.atoms.pow(base, e32, pos)
                } else {
                    Ok(base)
                }
            }
        }
    }

    fn signed_int(&mut self) -> Result<(usize, i64), ParseError> {
        let pos = self.lex.pos();
        let neg = matches!(self.lex.peek(), Some(Tok::Minus));
        if neg {
            self.lex.bump();
        }
        match self.lex.bump() {
            Some(Tok::Int(v)) => {
                let v: i64 = v.try_into().map_err(|_| ParseError {
                    pos,
                    msg: "integer out of range".into(),
                })?;
                Ok((pos, if neg { -v } else { v }))
            }
            Some(t) => err(pos, format!("expected integer, found {t:?}")),
            None => err(pos, "expected integer, found end of input"),
        }
    }

    fn atom(&mut self) -> Result<A::Node, ParseError> {
        let pos = self.lex.pos();
        match self.lex.bump() {
            Some(Tok::Int(v)) => Ok(self.atoms.number(v)),
            Some(Tok::Name(name)) => {
                if let Some(Tok::LParen) = self.lex.peek() {
                    self.lex.bump();
                    let mut args = Vec::new();
                    if !matches!(self.lex.peek(), Some(Tok::RParen)) {
                        loop {
                            args.push(self.expr()?);
                            match self.lex.peek() {
                                Some(Tok::Comma) => {
                                    self.lex.bump();
                                }
                                _ => break,
                            }
                        }
                    }
                    self.lex.expect(Tok::RParen, "closing parenthesis")?;
                    self.atoms.call(&name, pos, args)
                } else {
                    self.atoms.name(&name, pos)
                }
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.lex.expect(Tok::RParen, "closing parenthesis")?;
                Ok(e)
            }
            Some(t) => err(pos, format!("expected value, found {t:?}")),
            None => err(pos, "expected value, found end of input"),
        }
    }
}

/// Commutative rational-function semantics for the expression grammar.
struct RatAtoms<'t> {
    table: &'t Arc<VarTable>,
}

impl Atoms for RatAtoms<'_> {
    type Node = RatFun;

    fn number(&self, n: BigInt) -> RatFun {
        RatFun::constant(self.table, BigRational::from_integer(n))
    }

    fn name(&self, name: &str, pos: usize) -> Result<RatFun, ParseError> {
        match self.table.lookup(name) {
            Some(v) => Ok(RatFun::var(self.table, v)),
            None => err(pos, format!("unknown variable {name:?}")),
        }
    }

    fn add(&self, a: RatFun, b: RatFun, _pos: usize) -> Result<RatFun, ParseError> {
        Ok(a.add(&b))
    }

    fn sub(&self, a: RatFun, b: RatFun, _pos: usize) -> Result<RatFun, ParseError> {
        Ok(a.sub(&b))
    }

    fn mul(&self, a: RatFun, b: RatFun, _pos: usize) -> Result<RatFun, ParseError> {
        Ok(a.mul(&b))
    }

    fn div(&self, a: RatFun, b: RatFun, pos: usize) -> Result<RatFun, ParseError> {
        if b.is_zero() {
            return err(pos, "division by zero");
        }
        Ok(a.div(&b))
    }

    fn pow(&self, a: RatFun, e: i32, pos: usize) -> Result<RatFun, ParseError> {
        if e < 0 && a.is_zero() {
            return err(pos, "negative power of zero");
        }
        Ok(a.pow(e))
    }

    fn neg(&self, a: RatFun) -> RatFun {
        a.neg()
    }
}

/// Parses a rational-function expression.
pub fn parse_ratfun(input: &str, table: &Arc<VarTable>) -> Result<RatFun, ParseError> {
    ExprParser::parse(input, &RatAtoms { table })
}

/// Parses an expression that must denote a polynomial.
pub fn parse_mpoly(input: &str, table: &Arc<VarTable>) -> Result<MPoly, ParseError> {
    let r = parse_ratfun(input, table)?;
    if r.is_polynomial() {
        Ok(r.num().clone())
    } else {
        err(0, format!("expression is not a polynomial: {r}"))
    }
}

/// Parses a rational number literal such as `3`, `-5/7`.
pub fn parse_rational(input: &str) -> Result<BigRational, ParseError> {
    let table = VarTable::new::<&str>(&[]);
    let r = parse_ratfun(input, &table)?;
    r.constant_value().ok_or(ParseError {
        pos: 0,
        msg: "expected a rational constant".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::{q, qr};

    fn table() -> Arc<VarTable> {
        VarTable::new(&["x", "y", "n", "k"])
    }

    #[test]
    fn parses_canonical_poly_forms() {
        let t = table();
        for src in ["3*x^2 - x*y + 1/2", "-x", "0", "n^4 - 6*n^3 + 11*n^2 - 6*n"] {
            let p = parse_mpoly(src, &t).unwrap();
            assert_eq!(p.to_string(), src, "round trip for {src}");
        }
    }

    #[test]
    fn parses_ratfun_and_roundtrips() {
        let t = table();
        let r = parse_ratfun("k/(k - n - 1)", &t).unwrap();
        // canonical form: denominator sign fixed by its leading monomial
        assert_eq!(r.to_string(), "(-k)/(n - k + 1)");
        let again = parse_ratfun(&r.to_string(), &t).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn arithmetic_normalizes() {
        let t = table();
        let a = parse_ratfun("(x^2 - 1)/(x - 1)", &t).unwrap();
        let b = parse_ratfun("x + 1", &t).unwrap();
        assert_eq!(a, b);
        let c = parse_ratfun("2/4", &t).unwrap();
        assert_eq!(c.constant_value().unwrap(), qr(1, 2));
    }

    #[test]
    fn exponents_and_negatives() {
        let t = table();
        let a = parse_ratfun("x^-2", &t).unwrap();
        let b = parse_ratfun("1/(x*x)", &t).unwrap();
        assert_eq!(a, b);
        let c = parse_ratfun("-x^2", &t).unwrap();
        assert_eq!(c.num().leading_coeff(), q(-1));
    }

    #[test]
    fn error_positions() {
        let t = table();
        let e = parse_ratfun("x + qq", &t).unwrap_err();
        assert_eq!(e.pos, 4);
        assert!(e.msg.contains("qq"));
        let e = parse_ratfun("x +", &t).unwrap_err();
        assert_eq!(e.pos, 3);
        let e = parse_ratfun("(x + 1", &t).unwrap_err();
        assert!(e.msg.contains("parenthesis"));
        let e = parse_ratfun("x ? y", &t).unwrap_err();
        assert_eq!(e.pos, 2);
        let e = parse_ratfun("1/(x - x)", &t).unwrap_err();
        assert!(e.msg.contains("division by zero"));
        let e = parse_ratfun("f(x)", &t).unwrap_err();
        assert!(e.msg.contains("unknown function"));
    }

    #[test]
    fn rational_literal() {
        assert_eq!(parse_rational("-5/7").unwrap(), qr(-5, 7));
        assert_eq!(parse_rational("12").unwrap(), q(12));
        assert!(parse_rational("x").is_err());
    }
}
