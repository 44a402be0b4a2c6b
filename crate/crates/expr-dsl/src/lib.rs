//! Scalar expression language used for frame coefficients, kernels, cutoff
//! multipliers and test functions.
//!
//! The surface syntax is a small arithmetic grammar over variables `x1, x2,
//! …` / `v1, v2, …`, exact rational constants, and the functions `sin`,
//! `cos`, `exp`. Expressions are parsed to a tree ([`Expr`]), evaluated in
//! binary64, and differentiated symbolically. The simplifier only folds
//! constants and applies 0/1 identities — aggressive rewriting could change
//! the domain of division nodes.

mod parse;

pub use parse::{parse, ParseError};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Cosmetic letter of a variable. `x` is conventionally a chart coordinate,
/// `v` a group coordinate; both address the same slot of the evaluation
/// point and are interchangeable for differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarLetter {
    X,
    V,
}

/// Expression tree. `Pow` is by an integer literal; `Num` is an exact
/// rational.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(BigRational),
    /// Variable with 1-based coordinate index.
    Var(VarLetter, usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("variable {0} out of range: point has dimension {1}")]
    VarOutOfRange(usize, usize),
}

impl Expr {
    pub fn num_int(p: i64) -> Expr {
        Expr::Num(BigRational::from_integer(BigInt::from(p)))
    }

    pub fn num_rat(p: i64, q: i64) -> Expr {
        Expr::Num(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    /// The chart variable `x{j}` (1-based).
    pub fn x(j: usize) -> Expr {
        Expr::Var(VarLetter::X, j)
    }

    /// The group variable `v{j}` (1-based).
    pub fn v(j: usize) -> Expr {
        Expr::Var(VarLetter::V, j)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Num(r) if r.is_one())
    }

    /// Largest 1-based variable index occurring in the tree, 0 if none.
    pub fn max_var_index(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(_, j) => *j,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_var_index().max(b.max_var_index())
            }
            Expr::Pow(a, _) => a.max_var_index(),
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.max_var_index(),
        }
    }

    /// Whether the tree contains a division by a non-constant expression
    /// (these carry a nonvanishing-on-domain obligation for callers).
    pub fn has_nonconstant_division(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_, _) => false,
            Expr::Div(a, b) => {
                !matches!(**b, Expr::Num(_))
                    || a.has_nonconstant_division()
                    || b.has_nonconstant_division()
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.has_nonconstant_division() || b.has_nonconstant_division()
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
                a.has_nonconstant_division()
            }
        }
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Num(r) => Ok(rational_to_f64(r)),
            Expr::Var(_, j) => point
                .get(j - 1)
                .copied()
                .ok_or(EvalError::VarOutOfRange(*j, point.len())),
            Expr::Add(a, b) => Ok(a.eval(point)? + b.eval(point)?),
            Expr::Sub(a, b) => Ok(a.eval(point)? - b.eval(point)?),
            Expr::Mul(a, b) => Ok(a.eval(point)? * b.eval(point)?),
            Expr::Div(a, b) => {
                let d = b.eval(point)?;
                if d == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(a.eval(point)? / d)
            }
            Expr::Pow(a, k) => Ok(a.eval(point)?.powi(*k)),
            Expr::Neg(a) => Ok(-a.eval(point)?),
            Expr::Sin(a) => Ok(a.eval(point)?.sin()),
            Expr::Cos(a) => Ok(a.eval(point)?.cos()),
            Expr::Exp(a) => Ok(a.eval(point)?.exp()),
        }
    }

    /// Exact evaluation over the rationals. `None` when the tree leaves the
    /// rational-closed fragment: a transcendental node, a division by zero,
    /// or a variable beyond the point's dimension.
    pub fn eval_rational(&self, point: &[BigRational]) -> Option<BigRational> {
        match self {
            Expr::Num(r) => Some(r.clone()),
            Expr::Var(_, j) => point.get(j - 1).cloned(),
            Expr::Add(a, b) => Some(a.eval_rational(point)? + b.eval_rational(point)?),
            Expr::Sub(a, b) => Some(a.eval_rational(point)? - b.eval_rational(point)?),
            Expr::Mul(a, b) => Some(a.eval_rational(point)? * b.eval_rational(point)?),
            Expr::Div(a, b) => {
                let d = b.eval_rational(point)?;
                if d.is_zero() {
                    return None;
                }
                Some(a.eval_rational(point)? / d)
            }
            Expr::Pow(a, k) => {
                let base = a.eval_rational(point)?;
                if *k < 0 && base.is_zero() {
                    return None;
                }
                Some(rational_pow(&base, *k))
            }
            Expr::Neg(a) => Some(-a.eval_rational(point)?),
            Expr::Sin(_) | Expr::Cos(_) | Expr::Exp(_) => None,
        }
    }

    /// Exact partial derivative with respect to the coordinate with 1-based
    /// index `j` (letter-agnostic: `x{j}` and `v{j}` are the same slot).
    /// The result is simplified.
    pub fn diff(&self, j: usize) -> Expr {
        self.diff_raw(j).simplify()
    }

    fn diff_raw(&self, j: usize) -> Expr {
        match self {
            Expr::Num(_) => Expr::num_int(0),
            Expr::Var(_, k) => Expr::num_int(if *k == j { 1 } else { 0 }),
            Expr::Add(a, b) => Expr::Add(Box::new(a.diff_raw(j)), Box::new(b.diff_raw(j))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.diff_raw(j)), Box::new(b.diff_raw(j))),
            Expr::Mul(a, b) => Expr::Add(
                Box::new(Expr::Mul(Box::new(a.diff_raw(j)), b.clone())),
                Box::new(Expr::Mul(a.clone(), Box::new(b.diff_raw(j)))),
            ),
            Expr::Div(a, b) => Expr::Sub(
                Box::new(Expr::Div(Box::new(a.diff_raw(j)), b.clone())),
                Box::new(Expr::Div(
                    Box::new(Expr::Mul(a.clone(), Box::new(b.diff_raw(j)))),
                    Box::new(Expr::Pow(b.clone(), 2)),
                )),
            ),
            Expr::Pow(a, k) => Expr::Mul(
                Box::new(Expr::Mul(
                    Box::new(Expr::num_int(*k as i64)),
                    Box::new(Expr::Pow(a.clone(), k - 1)),
                )),
                Box::new(a.diff_raw(j)),
            ),
            Expr::Neg(a) => Expr::Neg(Box::new(a.diff_raw(j))),
            Expr::Sin(a) => Expr::Mul(Box::new(Expr::Cos(a.clone())), Box::new(a.diff_raw(j))),
            Expr::Cos(a) => Expr::Neg(Box::new(Expr::Mul(
                Box::new(Expr::Sin(a.clone())),
                Box::new(a.diff_raw(j)),
            ))),
            Expr::Exp(a) => Expr::Mul(Box::new(Expr::Exp(a.clone())), Box::new(a.diff_raw(j))),
        }
    }

    /// Constant folding plus 0/1 identities. Deliberately conservative:
    /// `0/e → 0` and `e^0 → 1` are *not* applied when they would change the
    /// domain of a division.
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Num(_) | Expr::Var(_, _) => self.clone(),
            Expr::Add(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Expr::Num(p), Expr::Num(q)) => Expr::Num(p + q),
                    _ if a.is_zero() => b,
                    _ if b.is_zero() => a,
                    _ => Expr::Add(Box::new(a), Box::new(b)),
                }
            }
            Expr::Sub(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Expr::Num(p), Expr::Num(q)) => Expr::Num(p - q),
                    _ if b.is_zero() => a,
                    _ if a.is_zero() => Expr::Neg(Box::new(b)),
                    _ => Expr::Sub(Box::new(a), Box::new(b)),
                }
            }
            Expr::Mul(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Expr::Num(p), Expr::Num(q)) => Expr::Num(p * q),
                    _ if a.is_zero() || b.is_zero() => Expr::num_int(0),
                    _ if a.is_one() => b,
                    _ if b.is_one() => a,
                    _ => Expr::Mul(Box::new(a), Box::new(b)),
                }
            }
            Expr::Div(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Expr::Num(p), Expr::Num(q)) if !q.is_zero() => Expr::Num(p / q),
                    _ if b.is_one() => a,
                    _ => Expr::Div(Box::new(a), Box::new(b)),
                }
            }
            Expr::Pow(a, k) => {
                let a = a.simplify();
                match (&a, *k) {
                    (Expr::Num(p), k) if k >= 0 || !p.is_zero() => {
                        Expr::Num(rational_pow(p, k))
                    }
                    (_, 1) => a,
                    _ => Expr::Pow(Box::new(a), *k),
                }
            }
            Expr::Neg(a) => {
                let a = a.simplify();
                match a {
                    Expr::Num(p) => Expr::Num(-p),
                    Expr::Neg(inner) => *inner,
                    _ => Expr::Neg(Box::new(a)),
                }
            }
            Expr::Sin(a) => {
                let a = a.simplify();
                if a.is_zero() {
                    Expr::num_int(0)
                } else {
                    Expr::Sin(Box::new(a))
                }
            }
            Expr::Cos(a) => {
                let a = a.simplify();
                if a.is_zero() {
                    Expr::num_int(1)
                } else {
                    Expr::Cos(Box::new(a))
                }
            }
            Expr::Exp(a) => {
                let a = a.simplify();
                if a.is_zero() {
                    Expr::num_int(1)
                } else {
                    Expr::Exp(Box::new(a))
                }
            }
        }
    }
}

fn rational_pow(p: &BigRational, k: i32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..k.unsigned_abs() {
        acc *= p;
    }
    if k < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// Exact-ish conversion for evaluation; falls back to a quotient of f64s
/// for rationals outside the f64 range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

// Display with minimal parentheses. Binding strength: additive 1,
// multiplicative 2, power base 3; leading unary minus only binds at
// expression level (0), matching the parser.
impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Expr {
    fn fmt_prec(&self, f: &mut std::fmt::Formatter<'_>, min_prec: u8) -> std::fmt::Result {
        let prec = match self {
            Expr::Neg(_) => 0,
            Expr::Num(r) if r.is_negative() => 0,
            Expr::Add(_, _) | Expr::Sub(_, _) => 1,
            // A fractional literal prints as "p/q" and re-parses as a
            // quotient, so it must claim division precedence.
            Expr::Num(r) if !r.denom().is_one() => 2,
            Expr::Mul(_, _) | Expr::Div(_, _) => 2,
            Expr::Pow(_, _) => 3,
            _ => 4,
        };
        if prec < min_prec {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Expr::Var(VarLetter::X, j) => write!(f, "x{j}"),
            Expr::Var(VarLetter::V, j) => write!(f, "v{j}"),
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)
            }
            Expr::Pow(a, k) => {
                // The grammar allows only one '^' per factor, so a Pow base
                // must itself be parenthesized: (a^2)^3, never a^2^3.
                a.fmt_prec(f, 4)?;
                write!(f, "^{k}")
            }
            Expr::Neg(a) => {
                // The operand needs at least multiplicative precedence:
                // "-(a + b)" must not print as "-a + b".
                write!(f, "-")?;
                a.fmt_prec(f, 2)
            }
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_examples() {
        let e = parse("x1*x2").unwrap();
        assert_eq!(e.diff(1), parse("x2").unwrap());
        let e = parse("sin(x3)").unwrap();
        assert_eq!(e.diff(3), parse("cos(x3)").unwrap());
    }

    #[test]
    fn diff_is_letter_agnostic() {
        let e = parse("v2^3").unwrap();
        assert_eq!(e.diff(2), parse("3*v2^2").unwrap());
    }

    #[test]
    fn rational_evaluation_is_exact_or_declined() {
        let q = |p: i64, d: i64| BigRational::new(BigInt::from(p), BigInt::from(d));
        let e = parse("x1^2 / (1 + x2)").unwrap();
        assert_eq!(e.eval_rational(&[q(2, 3), q(1, 2)]), Some(q(8, 27)));
        assert_eq!(e.eval_rational(&[q(1, 1), q(-1, 1)]), None);
        assert_eq!(parse("sin(x1)").unwrap().eval_rational(&[q(0, 1)]), None);
    }

    #[test]
    fn product_and_quotient_rules() {
        let e = parse("x1^2 * cos(x1)").unwrap();
        let d = e.diff(1);
        // 2 x cos x − x² sin x, evaluated at a couple of points.
        for x in [0.3_f64, -1.1, 2.7] {
            let want = 2.0 * x * x.cos() - x * x * x.sin();
            assert!((d.eval(&[x]).unwrap() - want).abs() < 1e-12);
        }
        let e = parse("x1 / (2 + x1^2)").unwrap();
        let d = e.diff(1);
        for x in [0.0, 0.5, -1.5] {
            let denom = 2.0 + x * x;
            let want = (denom - x * 2.0 * x) / (denom * denom);
            assert!((d.eval(&[x]).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn simplify_folds_constants_only() {
        assert_eq!(parse("2*3 + 1/2").unwrap().simplify(), Expr::num_rat(13, 2));
        assert_eq!(
            parse("0*sin(x1) + x2").unwrap().simplify(),
            parse("x2").unwrap()
        );
        // 0/e is kept: folding it away would erase the domain obligation.
        let kept = parse("(x1-x1*1)/x2").unwrap().simplify();
        assert!(matches!(kept, Expr::Div(_, _)));
    }

    #[test]
    fn eval_division_by_zero_is_an_error() {
        let e = parse("1/x1").unwrap();
        assert_eq!(e.eval(&[0.0]), Err(EvalError::DivisionByZero));
        assert_eq!(e.eval(&[2.0]), Ok(0.5));
    }

    #[test]
    fn eval_checks_dimension() {
        let e = parse("x3").unwrap();
        assert_eq!(e.eval(&[1.0, 2.0]), Err(EvalError::VarOutOfRange(3, 2)));
    }
}
