//! Differential operators written in a frame: formal words, normal
//! ordering, re-expression in another frame, and principal symbols.
//!
//! An `OpExpr` is a formal sum of factor strings, each factor a scalar
//! coefficient function or a frame field; composition is concatenation.
//! `normal_order` rewrites such a sum into the unique normal form
//! `Σ_α c_α(x) 𝕏^α` with ascending field powers, by repeatedly commuting
//! out-of-order fields through the bracket relations `[X_m, X_a] =
//! Σ_k c_{mak}(x) X_k` and differentiating coefficients as the fields move
//! past them.

use std::collections::BTreeMap;
use std::fmt;

use expr_dsl::Expr;
use graded_core::{GradedStructure, MultiIndex};
use nilpotent_group::Poly;
use num_rational::BigRational;
use uea::UEAElement;

use crate::chart::{poly_adjugate, poly_det, Frame};
use crate::osculate::{osculating_algebra, snap_rational};
use crate::{zero, Chart, ChartError, FrameCertificate};

fn emul(a: &Expr, b: &Expr) -> Expr {
    Expr::Mul(Box::new(a.clone()), Box::new(b.clone())).simplify()
}

fn eadd(a: &Expr, b: &Expr) -> Expr {
    Expr::Add(Box::new(a.clone()), Box::new(b.clone())).simplify()
}

/// One factor of an operator word: a pointwise multiplication by a scalar
/// function, or a frame field (1-based index).
#[derive(Debug, Clone, PartialEq)]
pub enum OpFactor {
    Scalar(Expr),
    Field(usize),
}

/// A formal sum of operator words.  The empty word is the identity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OpExpr {
    terms: Vec<Vec<OpFactor>>,
}

impl OpExpr {
    pub fn zero() -> OpExpr {
        OpExpr { terms: Vec::new() }
    }

    pub fn identity() -> OpExpr {
        OpExpr {
            terms: vec![Vec::new()],
        }
    }

    /// The frame field `X_j` (1-based).
    pub fn field(j: usize) -> OpExpr {
        OpExpr {
            terms: vec![vec![OpFactor::Field(j)]],
        }
    }

    /// A word `X_{j_1} ⋯ X_{j_ℓ}` of 1-based frame indices.
    pub fn word(word: &[usize]) -> OpExpr {
        OpExpr {
            terms: vec![word.iter().map(|&j| OpFactor::Field(j)).collect()],
        }
    }

    /// Multiplication by a scalar function.
    pub fn scalar(f: Expr) -> OpExpr {
        OpExpr {
            terms: vec![vec![OpFactor::Scalar(f)]],
        }
    }

    pub fn terms(&self) -> &[Vec<OpFactor>] {
        &self.terms
    }

    pub fn add(&self, other: &OpExpr) -> OpExpr {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        OpExpr { terms }
    }

    /// Operator composition: concatenate every pair of words.
    pub fn mul(&self, other: &OpExpr) -> OpExpr {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for left in &self.terms {
            for right in &other.terms {
                let mut word = left.clone();
                word.extend(right.iter().cloned());
                terms.push(word);
            }
        }
        OpExpr { terms }
    }

    pub fn scale(&self, f: &Expr) -> OpExpr {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut word = vec![OpFactor::Scalar(f.clone())];
                word.extend(t.iter().cloned());
                word
            })
            .collect();
        OpExpr { terms }
    }

    pub fn neg(&self) -> OpExpr {
        self.scale(&Expr::num_int(-1))
    }

    pub fn pow(&self, k: u32) -> OpExpr {
        let mut out = OpExpr::identity();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Apply the operator to a scalar expression, rightmost factor first.
    pub fn apply(&self, frame: &Frame, f: &Expr) -> Expr {
        let mut out = zero();
        for word in &self.terms {
            let mut g = f.clone();
            for factor in word.iter().rev() {
                g = match factor {
                    OpFactor::Scalar(s) => emul(s, &g),
                    OpFactor::Field(j) => frame.apply(*j, &g),
                };
            }
            out = eadd(&out, &g);
        }
        out
    }
}

/// A differential operator in normal form `Σ_α c_α(x) 𝕏^α`, where `𝕏^α =
/// X_1^{α_1} ⋯ X_n^{α_n}`.
#[derive(Debug, Clone)]
pub struct DiffOp {
    n: usize,
    terms: BTreeMap<MultiIndex, Expr>,
}

impl DiffOp {
    pub fn zero(n: usize) -> DiffOp {
        DiffOp {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> DiffOp {
        let mut op = DiffOp::zero(n);
        op.add_term(MultiIndex::zero(n), Expr::num_int(1));
        op
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn add_term(&mut self, alpha: MultiIndex, c: Expr) {
        if c.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(alpha)
            .or_insert_with(crate::zero);
        *entry = eadd(entry, &c);
        // `eadd` simplified; drop terms that collapsed to a literal zero.
        self.terms.retain(|_, v| !v.is_zero());
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Expr> {
        &self.terms
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Expr {
        self.terms.get(alpha).cloned().unwrap_or_else(zero)
    }

    pub fn add(&self, other: &DiffOp) -> DiffOp {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (alpha, c) in &other.terms {
            out.add_term(alpha.clone(), c.clone());
        }
        out
    }

    /// Left multiplication by a scalar function.
    pub fn scaled(&self, f: &Expr) -> DiffOp {
        let mut out = DiffOp::zero(self.n);
        for (alpha, c) in &self.terms {
            out.add_term(alpha.clone(), emul(f, c));
        }
        out
    }

    /// Largest graded order `[α]` present, 0 for the zero operator.
    pub fn max_order(&self, g: &GradedStructure) -> u32 {
        self.terms
            .keys()
            .map(|alpha| alpha.degree(g))
            .max()
            .unwrap_or(0)
    }

    /// Apply to a scalar expression: `Σ_α c_α · X_1^{α_1}(⋯ X_n^{α_n} f)`.
    pub fn apply(&self, frame: &Frame, f: &Expr) -> Expr {
        let mut out = zero();
        for (alpha, c) in &self.terms {
            let mut g = f.clone();
            for &m in alpha.to_word().iter().rev() {
                g = frame.apply(m + 1, &g);
            }
            out = eadd(&out, &emul(c, &g));
        }
        out
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (alpha, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (i, &a) in alpha.entries().iter().enumerate() {
                match a {
                    0 => {}
                    1 => write!(f, "·X{}", i + 1)?,
                    _ => write!(f, "·X{}^{}", i + 1, a)?,
                }
            }
        }
        Ok(())
    }
}

/// Normalize a formal operator sum to `Σ_α c_α(x) 𝕏^α`.  Requires the
/// frame's structure functions in closed form (polynomial frames).
pub fn normal_order(
    chart: &Chart,
    cert: &FrameCertificate,
    p: &OpExpr,
) -> Result<DiffOp, ChartError> {
    let _ = chart;
    if !cert.has_closed_form() {
        return Err(ChartError::NotSymbolic);
    }
    let n = cert.dim();
    check_fields(p, n)?;
    let mut out = DiffOp::zero(n);
    for word in p.terms() {
        let mut nf = DiffOp::identity(n);
        for factor in word.iter().rev() {
            nf = match factor {
                OpFactor::Scalar(f) => nf.scaled(f),
                OpFactor::Field(j) => prepend_field(cert, j - 1, &nf),
            };
        }
        out = out.add(&nf);
    }
    Ok(out)
}

fn check_fields(p: &OpExpr, n: usize) -> Result<(), ChartError> {
    for word in p.terms() {
        for factor in word {
            if let OpFactor::Field(j) = factor {
                if *j == 0 || *j > n {
                    return Err(ChartError::FieldOutOfRange { field: *j, dim: n });
                }
            }
        }
    }
    Ok(())
}

/// `X_m · D` for a normal-form `D`: differentiates each coefficient and
/// commutes `X_m` into each monomial (`m` is 0-based here).
fn prepend_field(cert: &FrameCertificate, m: usize, d: &DiffOp) -> DiffOp {
    let n = d.dim();
    let mut out = DiffOp::zero(n);
    for (alpha, c) in d.terms() {
        out.add_term(alpha.clone(), cert.frame().apply(m + 1, c));
        for (beta, e) in prepend_mono(cert, m, alpha).terms() {
            out.add_term(beta.clone(), emul(c, e));
        }
    }
    out
}

/// `X_m · 𝕏^α` as a normal form (0-based `m`).  If `m` is no larger than
/// the smallest letter of `α` the product is already ordered; otherwise
/// commute `X_m` past the leading letter `a` and pick up the bracket
/// `Σ_k c_{mak}(x) X_k`.
fn prepend_mono(cert: &FrameCertificate, m: usize, alpha: &MultiIndex) -> DiffOp {
    let n = alpha.dim();
    let word = alpha.to_word();
    if word.is_empty() || m <= word[0] {
        let mut out = DiffOp::zero(n);
        out.add_term(alpha.add(&MultiIndex::unit(n, m)), Expr::num_int(1));
        return out;
    }
    let a = word[0];
    let rest = alpha
        .checked_sub(&MultiIndex::unit(n, a))
        .expect("leading letter present");
    // X_m X_a 𝕏^rest = X_a (X_m 𝕏^rest) + [X_m, X_a] 𝕏^rest.
    let inner = prepend_mono(cert, m, &rest);
    let mut out = prepend_field(cert, a, &inner);
    for k in 0..n {
        let c = cert
            .structure_function(m + 1, a + 1, k + 1)
            .expect("normal ordering runs on closed-form certificates")
            .clone();
        if c.is_zero() {
            continue;
        }
        for (beta, e) in prepend_mono(cert, k, &rest).terms() {
            out.add_term(beta.clone(), emul(&c, e));
        }
    }
    out
}

/// Parse an operator expression: `+ − * ^` over scalar atoms (numbers,
/// `x<j>`/`v<j>` variables, `sin/cos/exp` of scalars) and frame symbols
/// `X<j>`.  Parenthesized subexpressions may be operator-valued; arguments
/// of transcendental functions must be scalar.  Adjacent symbols need an
/// explicit `*` (`X1X2` is not a product).
pub fn op_parse(src: &str) -> Result<OpExpr, ChartError> {
    let mut p = OpParser {
        src: src.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let e = p.sum()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct OpParser<'a> {
    src: &'a [u8],
    pos: usize,
}

/// A parsed factor that is either still scalar (so `sin(…)` and `^-1`
/// remain legal) or has committed to being an operator.
enum Parsed {
    Scalar(Expr),
    Operator(OpExpr),
}

impl Parsed {
    fn into_op(self) -> OpExpr {
        match self {
            Parsed::Scalar(e) => OpExpr::scalar(e),
            Parsed::Operator(op) => op,
        }
    }
}

impl<'a> OpParser<'a> {
    fn err(&self, message: &str) -> ChartError {
        ChartError::OpParse {
            at: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<OpExpr, ChartError> {
        self.skip_ws();
        let mut negate = false;
        if self.eat(b'-') {
            negate = true;
        } else {
            self.eat(b'+');
        }
        let mut acc = self.product()?;
        if negate {
            acc = acc.neg();
        }
        loop {
            self.skip_ws();
            let negate = match self.peek() {
                Some(b'+') => false,
                Some(b'-') => true,
                _ => return Ok(acc),
            };
            self.pos += 1;
            let term = self.product()?;
            acc = acc.add(&if negate { term.neg() } else { term });
        }
    }

    fn product(&mut self) -> Result<OpExpr, ChartError> {
        let mut acc = self.factor()?.into_op();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?.into_op());
                }
                Some(b'/') => {
                    let at = self.pos;
                    self.pos += 1;
                    match self.factor()? {
                        Parsed::Scalar(d) => {
                            let inv = Expr::Div(Box::new(Expr::num_int(1)), Box::new(d));
                            acc = OpExpr::scalar(inv).mul(&acc);
                        }
                        Parsed::Operator(_) => {
                            self.pos = at;
                            return Err(self.err("cannot divide by an operator"));
                        }
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Parsed, ChartError> {
        let base = self.primary()?;
        self.skip_ws();
        if !self.eat(b'^') {
            return Ok(base);
        }
        self.skip_ws();
        let at = self.pos;
        let negative = self.eat(b'-');
        let k = self.integer()? as i32;
        match base {
            Parsed::Scalar(e) => Ok(Parsed::Scalar(Expr::Pow(
                Box::new(e),
                if negative { -k } else { k },
            ))),
            Parsed::Operator(op) => {
                if negative {
                    self.pos = at;
                    Err(self.err("negative power of an operator"))
                } else {
                    Ok(Parsed::Operator(op.pow(k as u32)))
                }
            }
        }
    }

    fn primary(&mut self) -> Result<Parsed, ChartError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected )"));
                }
                // A parenthesized group with no fields stays scalar.
                match as_scalar(&inner) {
                    Some(e) => Ok(Parsed::Scalar(e)),
                    None => Ok(Parsed::Operator(inner)),
                }
            }
            Some(b'-') => {
                self.pos += 1;
                let inner = self.factor()?;
                Ok(match inner {
                    Parsed::Scalar(e) => Parsed::Scalar(Expr::Neg(Box::new(e))),
                    Parsed::Operator(op) => Parsed::Operator(op.neg()),
                })
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.number()?;
                Ok(Parsed::Scalar(num))
            }
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            _ => Err(self.err("expected a factor")),
        }
    }

    fn identifier(&mut self) -> Result<Parsed, ChartError> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_alphanumeric())
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let index_of = |s: &str| -> Option<usize> {
            if s.is_empty() || !s.bytes().all(|c| c.is_ascii_digit()) {
                None
            } else {
                s.parse().ok().filter(|&j: &usize| j >= 1)
            }
        };
        if let Some(rest) = name.strip_prefix('X') {
            if let Some(j) = index_of(rest) {
                return Ok(Parsed::Operator(OpExpr::field(j)));
            }
        }
        for letter in ['x', 'v'] {
            if let Some(rest) = name.strip_prefix(letter) {
                if let Some(j) = index_of(rest) {
                    let var = if letter == 'x' { Expr::x(j) } else { Expr::v(j) };
                    return Ok(Parsed::Scalar(var));
                }
            }
        }
        if matches!(name, "sin" | "cos" | "exp") {
            self.skip_ws();
            if !self.eat(b'(') {
                self.pos = start;
                return Err(self.err("function needs parentheses"));
            }
            let inner = self.sum()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(self.err("expected )"));
            }
            let arg = as_scalar(&inner).ok_or_else(|| ChartError::OpParse {
                at: start,
                message: format!("{name} of an operator is not defined"),
            })?;
            let boxed = Box::new(arg);
            return Ok(Parsed::Scalar(match name {
                "sin" => Expr::Sin(boxed),
                "cos" => Expr::Cos(boxed),
                _ => Expr::Exp(boxed),
            }));
        }
        self.pos = start;
        Err(self.err("unknown symbol (frame fields are X1, X2, …; use * between factors)"))
    }

    fn number(&mut self) -> Result<Expr, ChartError> {
        let start = self.pos;
        while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        let int_part: i64 = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("number too large"))?;
        if self.peek() == Some(b'.') {
            self.pos += 1;
            let frac_start = self.pos;
            while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                self.pos += 1;
            }
            if self.pos == frac_start {
                return Err(self.err("digits expected after decimal point"));
            }
            let frac = std::str::from_utf8(&self.src[frac_start..self.pos]).unwrap();
            let scale = 10i64
                .checked_pow(frac.len() as u32)
                .ok_or_else(|| self.err("decimal too long"))?;
            let frac_num: i64 = frac.parse().map_err(|_| self.err("decimal too long"))?;
            let q = BigRational::new(
                (int_part * scale + frac_num).into(),
                scale.into(),
            );
            return Ok(Expr::Num(q));
        }
        Ok(Expr::num_int(int_part))
    }

    fn integer(&mut self) -> Result<u32, ChartError> {
        let start = self.pos;
        while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("exponent expected"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("exponent too large"))
    }
}

/// Collapse an operator expression with no field factors into a scalar.
fn as_scalar(op: &OpExpr) -> Option<Expr> {
    let mut acc = zero();
    for word in op.terms() {
        let mut prod = Expr::num_int(1);
        for factor in word {
            match factor {
                OpFactor::Scalar(e) => prod = emul(&prod, e),
                OpFactor::Field(_) => return None,
            }
        }
        acc = eadd(&acc, &prod);
    }
    Some(acc)
}

/// The degree-`N` principal part `Σ_{[α]=N} c_α(x) ⟨X⟩^α` of a normal-form
/// operator, as an element of the enveloping algebra of the osculating
/// algebra at `x`.  Every term must have `[α] ≤ N`.
pub fn principal_symbol(
    chart: &Chart,
    cert: &FrameCertificate,
    p: &DiffOp,
    n_deg: u32,
    x: &[f64],
) -> Result<UEAElement, ChartError> {
    let g = cert.graded();
    for alpha in p.terms().keys() {
        let order = alpha.degree(g);
        if order > n_deg {
            return Err(ChartError::OrderExceeded {
                order,
                limit: n_deg,
            });
        }
    }
    let alg = osculating_algebra(chart, cert, x)?;
    let mut out = UEAElement::zero(&alg);
    let xr: Option<Vec<BigRational>> = x.iter().map(|&t| BigRational::from_float(t)).collect();
    for (alpha, c) in p.terms() {
        if alpha.degree(g) != n_deg {
            continue;
        }
        let value = xr
            .as_ref()
            .and_then(|xr| c.eval_rational(xr))
            .map(Ok)
            .unwrap_or_else(|| {
                c.eval(x)
                    .map(snap_rational)
                    .map_err(|source| ChartError::Eval {
                        x: x.to_vec(),
                        source,
                    })
            })?;
        let term = UEAElement::monomial(&alg, alpha.clone(), value);
        out = out.add(&term).expect("same osculating algebra");
    }
    Ok(out)
}

/// Rewrite an operator given in frame `X` as an operator in frame `Y` by
/// substituting `X_i = Σ_j S_{ij}(x) Y_j`, with `S = A B⁻¹` solved in
/// closed form from the two coefficient matrices.  Both frames must be
/// polynomial.
pub fn reexpress(
    chart: &Chart,
    cert_x: &FrameCertificate,
    cert_y: &FrameCertificate,
    p: &OpExpr,
) -> Result<OpExpr, ChartError> {
    let n = chart.dim();
    check_fields(p, n)?;
    let to_polys = |frame: &Frame| -> Option<Vec<Vec<Poly>>> {
        frame
            .rows()
            .iter()
            .map(|row| row.iter().map(|e| Poly::from_expr(e, n)).collect())
            .collect()
    };
    let a = to_polys(cert_x.frame()).ok_or(ChartError::NotSymbolic)?;
    let b = to_polys(cert_y.frame()).ok_or(ChartError::NotSymbolic)?;
    let det = poly_det(&b);
    let adj = poly_adjugate(&b);
    let det_const = det.homogeneous_degree(&vec![1; n]) == Some(0);
    // S[i][j] = Σ_k A[i][k]·adj(B)[k][j] / det(B).
    let mut s = vec![vec![zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut num = Poly::zero(n);
            for k in 0..n {
                num = num.add(&a[i][k].mul(&adj[k][j]));
            }
            if num.is_zero() {
                continue;
            }
            s[i][j] = if det_const {
                num.scale(&det.constant_term().recip()).to_expr()
            } else {
                Expr::Div(Box::new(num.to_expr()), Box::new(det.to_expr()))
            }
            .simplify();
        }
    }
    let mut out = OpExpr::zero();
    for word in p.terms() {
        let mut acc = OpExpr::identity();
        for factor in word {
            let piece = match factor {
                OpFactor::Scalar(f) => OpExpr::scalar(f.clone()),
                OpFactor::Field(i) => {
                    let mut sum = OpExpr::zero();
                    for j in 0..n {
                        if s[i - 1][j].is_zero() {
                            continue;
                        }
                        sum = sum
                            .add(&OpExpr::scalar(s[i - 1][j].clone()).mul(&OpExpr::field(j + 1)));
                    }
                    sum
                }
            };
            acc = acc.mul(&piece);
        }
        out = out.add(&acc);
    }
    Ok(out)
}
