//! The polynomial basis dual to invariant derivatives at the identity,
//! group Taylor polynomials built on it, Leibniz expansion coefficients of
//! the group law, and detection of higher-order maps.

use crate::law::{invariant_fields, GroupLaw, PolyVectorField, Side};
use crate::poly::Poly;
use expr_dsl::{EvalError, Expr};
use graded_core::{scaling_exponent_probe, GradedStructure, MultiIndex};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Apply the composed derivative `L^β = L_1^{β_1} ∘ … ∘ L_n^{β_n}` to a
/// polynomial; the rightmost factor acts first.
pub fn apply_field_word(fields: &[PolyVectorField], beta: &MultiIndex, f: &Poly) -> Poly {
    let mut g = f.clone();
    for j in (0..beta.dim()).rev() {
        for _ in 0..beta.entry(j) {
            g = fields[j].apply(&g);
        }
    }
    g
}

/// The homogeneous polynomials `q_α`, `[α] ≤ n_max`, with
/// `(L^β q_α)(0) = δ_{αβ}`: the group analogue of `v^α/α!`.
///
/// Solved degree by degree: `L^β` maps `[α]`-homogeneous polynomials to
/// `([α]−[β])`-homogeneous ones, so the duality conditions couple only
/// multi-indices of equal graded degree, and each block is a finite
/// invertible linear system over the monomials of that degree.
pub fn dual_monomial_basis(law: &GroupLaw, n_max: u32) -> BTreeMap<MultiIndex, Poly> {
    let g = law.algebra().graded();
    let n = g.dim();
    let fields = invariant_fields(law, Side::Left);
    let mut basis = BTreeMap::new();
    for m in 0..=n_max {
        let indices = g.indices_of_degree(m);
        if indices.is_empty() {
            continue;
        }
        let dim = indices.len();
        // M[row β][col γ] = (L^β v^γ)(0)
        let mut mat: Vec<Vec<BigRational>> = Vec::with_capacity(dim);
        for beta in &indices {
            let mut row = Vec::with_capacity(dim);
            for gamma in &indices {
                let monomial = Poly::monomial(n, gamma.clone(), BigRational::one());
                row.push(apply_field_word(&fields, beta, &monomial).constant_term());
            }
            mat.push(row);
        }
        let inv = invert_rational(mat).unwrap_or_else(|| {
            panic!("duality system singular at graded degree {m}; the group law is inconsistent")
        });
        for (col, alpha) in indices.iter().enumerate() {
            let mut q = Poly::zero(n);
            for (row, gamma) in indices.iter().enumerate() {
                let c = &inv[row][col];
                if !c.is_zero() {
                    q = q.add(&Poly::monomial(n, gamma.clone(), c.clone()));
                }
            }
            basis.insert(alpha.clone(), q);
        }
    }
    basis
}

/// Exact inverse by Gauss–Jordan elimination; `None` if singular.
fn invert_rational(mut m: Vec<Vec<BigRational>>) -> Option<Vec<Vec<BigRational>>> {
    let n = m.len();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col].clone();
        for x in m[col].iter_mut().chain(inv[col].iter_mut()) {
            *x /= &p;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for c in 0..n {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
                let delta = &factor * &inv[col][c];
                inv[r][c] -= delta;
            }
        }
    }
    Some(inv)
}

/// Group Taylor polynomial `P_N(y) = Σ_{[β]≤N} (L^β f)(0) · q_β(y)` from an
/// oracle for the invariant derivatives at the identity.
pub fn fs_taylor(
    law: &GroupLaw,
    n_max: u32,
    lbeta_at_zero: &mut dyn FnMut(&MultiIndex) -> BigRational,
) -> Poly {
    let n = law.dim();
    let mut p = Poly::zero(n);
    for (beta, q) in dual_monomial_basis(law, n_max) {
        let c = lbeta_at_zero(&beta);
        if !c.is_zero() {
            p = p.add(&q.scale(&c));
        }
    }
    p
}

/// Taylor polynomial of an expression, with the derivative oracle realised
/// by symbolic differentiation along the invariant fields.
///
/// When the expression is itself polynomial the computation is exact; for
/// transcendental expressions the derivatives are evaluated at the origin in
/// floating point and converted to the exactly-representing rational.
pub fn fs_taylor_expr(law: &GroupLaw, f: &Expr, n_max: u32) -> Result<Poly, EvalError> {
    let n = law.dim();
    let fields = invariant_fields(law, Side::Left);
    if let Some(fp) = Poly::from_expr(f, n) {
        let mut oracle = |beta: &MultiIndex| apply_field_word(&fields, beta, &fp).constant_term();
        return Ok(fs_taylor(law, n_max, &mut oracle));
    }
    let field_exprs: Vec<Vec<Expr>> = fields
        .iter()
        .map(|l| l.coeffs().iter().map(|c| c.to_expr()).collect())
        .collect();
    let origin = vec![0.0; n];
    let mut failure: Option<EvalError> = None;
    let mut oracle = |beta: &MultiIndex| -> BigRational {
        let mut g = f.clone();
        for j in (0..n).rev() {
            for _ in 0..beta.entry(j) {
                g = apply_field_expr(&field_exprs[j], &g);
            }
        }
        match g.eval(&origin) {
            Ok(val) => BigRational::from_float(val).unwrap_or_else(BigRational::zero),
            Err(e) => {
                failure.get_or_insert(e);
                BigRational::zero()
            }
        }
    };
    let p = fs_taylor(law, n_max, &mut oracle);
    match failure {
        Some(e) => Err(e),
        None => Ok(p),
    }
}

/// `L f = Σ_i a_i ∂_i f` at the expression level.
fn apply_field_expr(coeffs: &[Expr], f: &Expr) -> Expr {
    let mut out = Expr::num_int(0);
    for (i, a) in coeffs.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        let term = Expr::Mul(Box::new(a.clone()), Box::new(f.diff(i + 1)));
        out = Expr::Add(Box::new(out), Box::new(term));
    }
    out.simplify()
}

/// Coefficients of the expansion `(v*w)^α = Σ c^{(α)}_{α₁,α₂} v^{α₁} w^{α₂}`,
/// where the sum runs over `[α₁] + [α₂] = [α]`.
pub fn leibniz_coefficients(
    law: &GroupLaw,
    alpha: &MultiIndex,
) -> BTreeMap<(MultiIndex, MultiIndex), BigRational> {
    let n = law.dim();
    assert_eq!(alpha.dim(), n);
    let mut product = Poly::one(2 * n);
    for (i, zi) in law.z().iter().enumerate() {
        for _ in 0..alpha.entry(i) {
            product = product.mul(zi);
        }
    }
    product
        .terms()
        .map(|(mi, c)| {
            let e = mi.entries();
            let a1 = MultiIndex::new(e[..n].to_vec());
            let a2 = MultiIndex::new(e[n..].to_vec());
            ((a1, a2), c.clone())
        })
        .collect()
}

/// Outcome of the exact higher-order check. Components are reported 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HigherOrderVerdict {
    HigherOrder,
    NotHigherOrder {
        component: usize,
        monomial: MultiIndex,
    },
}

/// Exact test: `r = (r_1, …, r_n)` is higher order iff every monomial of
/// `r_j` has graded degree strictly greater than `υ_j`.
pub fn higher_order_test(r: &[Poly], g: &GradedStructure) -> HigherOrderVerdict {
    let n = g.dim();
    assert_eq!(r.len(), n, "one component per coordinate");
    let weights = g.weights();
    for (j, rj) in r.iter().enumerate() {
        assert_eq!(rj.nvars(), n);
        for (mi, _) in rj.terms() {
            let degree: u64 = mi
                .entries()
                .iter()
                .zip(weights)
                .map(|(&e, &w)| e as u64 * w as u64)
                .sum();
            if degree <= weights[j] as u64 {
                return HigherOrderVerdict::NotHigherOrder {
                    component: j + 1,
                    monomial: mi.clone(),
                };
            }
        }
    }
    HigherOrderVerdict::HigherOrder
}

/// Confidence report from the numeric scaling probe; never a proof.
#[derive(Debug, Clone, PartialEq)]
pub struct HigherOrderProbe {
    /// Per component: smallest fitted vanishing order over the directions
    /// (`+∞` when the component vanished identically on every ray).
    pub component_slopes: Vec<f64>,
    /// The weights the slopes must strictly exceed.
    pub weights: Vec<u32>,
    pub pass: bool,
}

/// Numeric path of the higher-order test: fit the vanishing order of each
/// component of `ε ↦ r(δ_ε v)` over the given directions and grid, and
/// require every fitted order to exceed the component weight.
pub fn higher_order_probe(
    map: &dyn Fn(&[f64]) -> Vec<f64>,
    g: &GradedStructure,
    directions: &[Vec<f64>],
    eps_grid: &[f64],
) -> HigherOrderProbe {
    let n = g.dim();
    let weights = g.weights().to_vec();
    let mut slopes = vec![f64::INFINITY; n];
    for v in directions {
        for j in 0..n {
            let probe = scaling_exponent_probe(
                |y| map(y)[j],
                g,
                v,
                eps_grid,
            )
            .expect("probe dimensions are consistent");
            if probe.exponent < slopes[j] {
                slopes[j] = probe.exponent;
            }
        }
    }
    let pass = slopes
        .iter()
        .zip(&weights)
        .all(|(&s, &w)| s > w as f64);
    HigherOrderProbe {
        component_slopes: slopes,
        weights,
        pass,
    }
}
