//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expression := '-'? term (('+'|'-') term)*
//! term       := factor (('*'|'/') factor)*
//! factor     := base ('^' integer)?
//! base       := number | ident | '(' expression ')' | func '(' expression ')'
//! func       := 'sin' | 'cos' | 'exp'
//! ident      := [xv][1-9][0-9]*
//! number     := digits ('.' digits)?            (exact rational value)
//! ```
//!
//! Whitespace is insignificant. A quotient of number literals like `1/2`
//! folds to the exact rational at parse time, so `p/q` works as a rational
//! literal. The optional leading `'-'` (not present in the original grammar
//! sketch) is needed so that printed trees containing negation re-parse.

use crate::{Expr, VarLetter};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
    };
    p.skip_ws();
    let e = p.expression()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(format!("unexpected character '{}'", p.chars[p.pos])));
    }
    Ok(e)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Parser {
    fn error(&self, message: String) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column,
            message,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let negated = self.eat('-');
        let mut acc = self.term()?;
        if negated {
            acc = match acc {
                // Fold into a negative literal, but never through one that is
                // already negative: "-(-1)" stays Neg(Num(-1)) so the printed
                // form round-trips.
                Expr::Num(r) if !r.is_negative() => Expr::Num(-r),
                other => Expr::Neg(Box::new(other)),
            };
        }
        loop {
            self.skip_ws();
            if self.eat('+') {
                let rhs = self.term()?;
                acc = Expr::Add(Box::new(acc), Box::new(rhs));
            } else if self.eat('-') {
                let rhs = self.term()?;
                acc = Expr::Sub(Box::new(acc), Box::new(rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            if self.eat('*') {
                let rhs = self.factor()?;
                acc = Expr::Mul(Box::new(acc), Box::new(rhs));
            } else if self.eat('/') {
                let rhs = self.factor()?;
                acc = match (acc, rhs) {
                    // Fold `p/q` into a rational literal.
                    (Expr::Num(p), Expr::Num(q)) if !q.is_zero() => Expr::Num(p / q),
                    (a, b) => Expr::Div(Box::new(a), Box::new(b)),
                };
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        self.skip_ws();
        if self.eat('^') {
            self.skip_ws();
            let k = self.integer()?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("expected an expression, found end of input".into())),
            Some('(') => {
                self.bump();
                let e = self.expression()?;
                self.skip_ws();
                if !self.eat(')') {
                    return Err(self.error("expected ')'".into()));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident_or_func(),
            Some(c) => Err(self.error(format!("unexpected character '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let mut int_part = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            int_part.push(self.bump().unwrap());
        }
        let mut frac_part = String::new();
        if self.peek() == Some('.') {
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                frac_part.push(self.bump().unwrap());
            }
            if frac_part.is_empty() {
                return Err(self.error("expected digits after decimal point".into()));
            }
        }
        let numer = BigInt::from_str_radix(&format!("{int_part}{frac_part}"), 10)
            .map_err(|e| self.error(format!("bad number: {e}")))?;
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        Ok(Expr::Num(BigRational::new(numer, denom)))
    }

    fn ident_or_func(&mut self) -> Result<Expr, ParseError> {
        let start_line = self.line;
        let start_col = self.column;
        let mut name = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            name.push(self.bump().unwrap());
        }
        match name.as_str() {
            "sin" | "cos" | "exp" => {
                self.skip_ws();
                if !self.eat('(') {
                    return Err(self.error(format!("expected '(' after '{name}'")));
                }
                let arg = self.expression()?;
                self.skip_ws();
                if !self.eat(')') {
                    return Err(self.error("expected ')'".into()));
                }
                Ok(match name.as_str() {
                    "sin" => Expr::Sin(Box::new(arg)),
                    "cos" => Expr::Cos(Box::new(arg)),
                    _ => Expr::Exp(Box::new(arg)),
                })
            }
            "x" | "v" => {
                let letter = if name == "x" { VarLetter::X } else { VarLetter::V };
                let mut digits = String::new();
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    digits.push(self.bump().unwrap());
                }
                if digits.is_empty() || digits.starts_with('0') {
                    return Err(ParseError {
                        line: start_line,
                        column: start_col,
                        message: format!(
                            "variable '{name}' needs a positive index (x1, x2, …)"
                        ),
                    });
                }
                let j: usize = digits
                    .parse()
                    .map_err(|e| self.error(format!("bad variable index: {e}")))?;
                Ok(Expr::Var(letter, j))
            }
            other => Err(ParseError {
                line: start_line,
                column: start_col,
                message: format!("unknown identifier '{other}'"),
            }),
        }
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        let neg = self.eat('-');
        let mut digits = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            digits.push(self.bump().unwrap());
        }
        if digits.is_empty() {
            return Err(self.error("expected an integer exponent".into()));
        }
        let k: i32 = digits
            .parse()
            .map_err(|e| self.error(format!("bad exponent: {e}")))?;
        Ok(if neg { -k } else { k })
    }
}
