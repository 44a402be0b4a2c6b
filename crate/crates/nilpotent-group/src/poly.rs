//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms are keyed by [`MultiIndex`]; zero coefficients are never stored, so
//! structural equality is semantic equality. This is the workhorse behind
//! group laws, invariant vector fields, and dual bases — everything in this
//! crate that must hold *exactly* is computed in this representation.

use expr_dsl::Expr;
use graded_core::MultiIndex;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<MultiIndex, BigRational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(MultiIndex::zero(nvars), c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, BigRational::one())
    }

    /// The variable `v_{i+1}` (0-based slot `i`).
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index {i} out of range for {nvars} vars");
        Poly::monomial(nvars, MultiIndex::unit(nvars, i), BigRational::one())
    }

    pub fn monomial(nvars: usize, index: MultiIndex, coeff: BigRational) -> Self {
        assert_eq!(index.dim(), nvars, "multi-index dimension mismatch");
        let mut p = Poly::zero(nvars);
        if !coeff.is_zero() {
            p.terms.insert(index, coeff);
        }
        p
    }

    pub fn int(nvars: usize, k: i64) -> Self {
        Poly::constant(nvars, BigRational::from_integer(BigInt::from(k)))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, index: &MultiIndex) -> BigRational {
        self.terms.get(index).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Constant term, i.e. the value at the origin.
    pub fn constant_term(&self) -> BigRational {
        self.coeff(&MultiIndex::zero(self.nvars))
    }

    fn insert_add(&mut self, index: MultiIndex, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(index) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get() + &coeff;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let mut out = self.clone();
        for (mi, c) in &other.terms {
            out.insert_add(mi.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, r: &BigRational) -> Poly {
        if r.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * r)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.insert_add(ma.add(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one(self.nvars);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to variable slot `i`.
    pub fn deriv(&self, i: usize) -> Poly {
        assert!(i < self.nvars);
        let mut out = Poly::zero(self.nvars);
        for (mi, c) in &self.terms {
            let e = mi.entry(i);
            if e == 0 {
                continue;
            }
            let lowered = mi.checked_sub(&MultiIndex::unit(self.nvars, i)).unwrap();
            out.insert_add(lowered, c * BigRational::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Substitute `args[i]` for variable slot `i`. All `args` must share a
    /// variable count, which becomes the variable count of the result.
    pub fn compose(&self, args: &[Poly]) -> Poly {
        assert_eq!(args.len(), self.nvars, "need one substitution per variable");
        let out_vars = args.first().map_or(0, Poly::nvars);
        assert!(args.iter().all(|a| a.nvars == out_vars));
        let mut out = Poly::zero(out_vars);
        for (mi, c) in &self.terms {
            let mut term = Poly::constant(out_vars, c.clone());
            for (i, arg) in args.iter().enumerate() {
                for _ in 0..mi.entry(i) {
                    term = term.mul(arg);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Set every variable *not* listed in `keep` to zero and renumber the
    /// kept ones (in the given order) as the variables of the result.
    pub fn project_zero(&self, keep: &[usize]) -> Poly {
        let mut out = Poly::zero(keep.len());
        'term: for (mi, c) in &self.terms {
            let mut entries = vec![0u32; keep.len()];
            let mut accounted = 0u32;
            for (slot, &src) in keep.iter().enumerate() {
                entries[slot] = mi.entry(src);
                accounted += mi.entry(src);
            }
            if accounted != mi.len() {
                continue 'term; // a dropped variable appears: term vanishes at 0
            }
            out.insert_add(MultiIndex::new(entries), c.clone());
        }
        out
    }

    pub fn eval_rational(&self, v: &[BigRational]) -> BigRational {
        assert_eq!(v.len(), self.nvars);
        self.terms
            .iter()
            .map(|(mi, c)| c * mi.eval_rational(v))
            .sum()
    }

    pub fn eval_f64(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.nvars);
        self.terms
            .iter()
            .map(|(mi, c)| rational_to_f64(c) * mi.eval_f64(v))
            .sum()
    }

    /// Weighted degree of each monomial must be the same for a homogeneous
    /// polynomial; returns that degree, or `None` if the terms are mixed.
    /// The zero polynomial is homogeneous of every degree (returns `Some(0)`).
    pub fn homogeneous_degree(&self, weights: &[u32]) -> Option<u64> {
        assert_eq!(weights.len(), self.nvars);
        let mut degree = None;
        for (mi, _) in &self.terms {
            let d: u64 = mi
                .entries()
                .iter()
                .zip(weights)
                .map(|(&e, &w)| e as u64 * w as u64)
                .sum();
            match degree {
                None => degree = Some(d),
                Some(prev) if prev != d => return None,
                _ => {}
            }
        }
        degree.or(Some(0))
    }

    /// Lift to an expression tree in the variables `v1, …, vn`.
    pub fn to_expr(&self) -> Expr {
        let mut out: Option<Expr> = None;
        for (mi, c) in &self.terms {
            let mut factor = Expr::Num(c.clone());
            for (i, &e) in mi.entries().iter().enumerate() {
                let var = Expr::v(i + 1);
                let powed = match e {
                    0 => continue,
                    1 => var,
                    _ => Expr::Pow(Box::new(var), e as i32),
                };
                factor = Expr::Mul(Box::new(factor), Box::new(powed));
            }
            out = Some(match out {
                None => factor,
                Some(acc) => Expr::Add(Box::new(acc), Box::new(factor)),
            });
        }
        out.unwrap_or_else(|| Expr::num_int(0)).simplify()
    }

    /// Interpret an expression as a polynomial in `nvars` variables, if it
    /// is one: built from literals, variables (either letter), `+ − * ^`,
    /// and division by nonzero constants. Returns `None` otherwise.
    pub fn from_expr(e: &Expr, nvars: usize) -> Option<Poly> {
        match e {
            Expr::Num(r) => Some(Poly::constant(nvars, r.clone())),
            Expr::Var(_, j) => {
                if *j >= 1 && *j <= nvars {
                    Some(Poly::var(nvars, j - 1))
                } else {
                    None
                }
            }
            Expr::Add(a, b) => Some(Poly::from_expr(a, nvars)?.add(&Poly::from_expr(b, nvars)?)),
            Expr::Sub(a, b) => Some(Poly::from_expr(a, nvars)?.sub(&Poly::from_expr(b, nvars)?)),
            Expr::Mul(a, b) => Some(Poly::from_expr(a, nvars)?.mul(&Poly::from_expr(b, nvars)?)),
            Expr::Neg(a) => Some(Poly::from_expr(a, nvars)?.neg()),
            Expr::Div(a, b) => {
                let divisor = Poly::from_expr(b, nvars)?;
                let c = divisor.constant_term();
                if !c.is_zero() && divisor == Poly::constant(nvars, c.clone()) {
                    Some(Poly::from_expr(a, nvars)?.scale(&c.recip()))
                } else {
                    None
                }
            }
            Expr::Pow(a, k) => {
                let base = Poly::from_expr(a, nvars)?;
                if *k >= 0 {
                    Some(base.pow(*k as u32))
                } else {
                    // negative power of a nonzero constant is still constant
                    let c = base.constant_term();
                    if !c.is_zero() && base == Poly::constant(nvars, c.clone()) {
                        let mut out = BigRational::one();
                        let inv = c.recip();
                        for _ in 0..((-(*k as i64)) as u64) {
                            out *= &inv;
                        }
                        Some(Poly::constant(nvars, out))
                    } else {
                        None
                    }
                }
            }
            Expr::Sin(_) | Expr::Cos(_) | Expr::Exp(_) => None,
        }
    }

    /// Render with caller-supplied variable names.
    pub fn render(&self, name: &dyn Fn(usize) -> String) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (mi, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors = Vec::new();
            if !mag.is_one() || mi.is_empty() {
                factors.push(if mag.denom().is_one() {
                    format!("{}", mag.numer())
                } else {
                    format!("{}/{}", mag.numer(), mag.denom())
                });
            }
            for (i, &e) in mi.entries().iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(name(i)),
                    _ => factors.push(format!("{}^{}", name(i), e)),
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    // Exact for everything this crate produces; falls back to a quotient of
    // big-integer approximations far outside the f64 integer range.
    let num = r.numer();
    let den = r.denom();
    match (num.to_string().parse::<f64>(), den.to_string().parse::<f64>()) {
        (Ok(n), Ok(d)) if d != 0.0 && n.is_finite() && d.is_finite() => n / d,
        _ => {
            let digits = 30usize;
            let scale = BigInt::from(10u32).pow(digits as u32);
            let scaled = (num * &scale) / den;
            scaled.to_string().parse::<f64>().unwrap_or(f64::NAN) / 1e30
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&|i| format!("v{}", i + 1)))
    }
}

impl std::ops::Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        Poly::add(self, rhs)
    }
}

impl std::ops::Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        Poly::sub(self, rhs)
    }
}

impl std::ops::Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        Poly::mul(self, rhs)
    }
}

impl std::ops::Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::neg(self)
    }
}
