//! Small recursive-descent parser for the exact text grammar shared by
//! field elements, polynomials and rational functions.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('+' | '-') unary | power
//! power := atom ('^' ['-'] integer)?
//! atom  := integer | 'i' | <var> | '(' expr ')'
//! ```

use num_bigint::BigInt;
use num_traits::Zero;

use super::field::FieldElem;
use super::ratfunc::RationalFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(BigInt),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        if c.is_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() {
            let start = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            let digits: String = chars[start..k].iter().collect();
            out.push(Token::Int(digits.parse().unwrap()));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            out.push(Token::Ident(chars[start..k].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            k += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?} in {s:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    var: &'a str,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at token {} in {:?}", self.pos, self.src))
    }

    fn expr(&mut self) -> Result<RationalFunction> {
        let mut acc = self.term()?;
        loop {
            if self.eat_op('+') {
                acc = &acc + &self.term()?;
            } else if self.eat_op('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RationalFunction> {
        let mut acc = self.unary()?;
        loop {
            if self.eat_op('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat_op('/') {
                let d = self.unary()?;
                acc = acc.checked_div(&d)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<RationalFunction> {
        if self.eat_op('-') {
            return Ok(-&self.unary()?);
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<RationalFunction> {
        let base = self.atom()?;
        if !self.eat_op('^') {
            return Ok(base);
        }
        let paren = self.eat_op('(');
        let neg = self.eat_op('-');
        let e = match self.tokens.get(self.pos).cloned() {
            Some(Token::Int(n)) => {
                self.pos += 1;
                i64::try_from(n).map_err(|_| self.err("exponent too large"))?
            }
            _ => return Err(self.err("expected integer exponent")),
        };
        if paren && !self.eat_op(')') {
            return Err(self.err("expected ')'"));
        }
        base.pow(if neg { -e } else { e })
    }

    fn atom(&mut self) -> Result<RationalFunction> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Int(n)) => {
                self.pos += 1;
                Ok(RationalFunction::constant(FieldElem::from_bigint(n)))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if name == self.var {
                    Ok(RationalFunction::x())
                } else if name == "i" {
                    Ok(RationalFunction::constant(FieldElem::i()))
                } else {
                    Err(self.err(&format!("unknown identifier {name:?}")))
                }
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat_op(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            _ => Err(self.err("unexpected end of input or operator")),
        }
    }
}

/// Parses a rational function in the indeterminate `var`.
pub fn parse_rational_function(s: &str, var: &str) -> Result<RationalFunction> {
    let tokens = tokenize(s)?;
    if tokens.is_empty() {
        return Err(Error::Parse("empty input".into()));
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        var,
        src: s,
    };
    let r = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(p.err("trailing input"));
    }
    Ok(r)
}

pub fn parse_field_elem(s: &str) -> Result<FieldElem> {
    // An empty variable name cannot match any identifier.
    let r = parse_rational_function(s, "")?;
    r.as_constant()
        .ok_or_else(|| Error::Parse(format!("{s:?} is not a constant")))
}

pub fn parse_polynomial(s: &str, var: &str) -> Result<super::poly::Polynomial> {
    let r = parse_rational_function(s, var)?;
    if !r.is_polynomial() {
        return Err(Error::Parse(format!("{s:?} is not a polynomial")));
    }
    Ok(r.num().clone())
}

/// A positive integer parameter such as a Mahler exponent.
pub fn parse_positive_int(s: &str) -> Result<u64> {
    let c = parse_field_elem(s)?;
    match c.as_integer() {
        Some(n) if !n.is_zero() && n > BigInt::zero() => {
            u64::try_from(n).map_err(|_| Error::Parse(format!("{s:?} is too large")))
        }
        _ => Err(Error::Parse(format!("{s:?} is not a positive integer"))),
    }
}
