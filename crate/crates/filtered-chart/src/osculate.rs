//! Per-point osculating structures of a validated frame.
//!
//! Freezing the structure functions at a point and keeping only the
//! weight-additive entries (`υ_k = υ_i + υ_j`) yields the structure
//! constants of a graded nilpotent Lie algebra — the osculating algebra at
//! that point — and hence an osculating group law.  The discarded entries
//! (`υ_k < υ_i + υ_j`) form a bilinear remainder that is higher order for
//! the grading.

use std::sync::Arc;

use graded_core::MultiIndex;
use nilpotent_group::{
    group_law, lie_validate, BracketEntry, GroupLaw, LieAlgebra, Poly,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::{Chart, ChartError, FrameCertificate};

/// Structure constants at `x` as exact rationals: the closed form at an
/// exactly-representable point when possible, otherwise the pointwise
/// solution snapped to the nearest small rational.
fn constants_at(
    cert: &FrameCertificate,
    x: &[f64],
) -> Result<Vec<Vec<Vec<BigRational>>>, ChartError> {
    let xr: Option<Vec<BigRational>> = x.iter().map(|&t| BigRational::from_float(t)).collect();
    if let Some(xr) = xr {
        if let Some(cube) = cert.structure_at_rational(&xr) {
            return Ok(cube);
        }
    }
    let cube = cert.structure_at(x)?;
    Ok(cube
        .into_iter()
        .map(|plane| {
            plane
                .into_iter()
                .map(|row| row.into_iter().map(snap_rational).collect())
                .collect()
        })
        .collect())
}

/// Nearest rational with a small denominator (continued fractions), used to
/// clean up pointwise linear-solve output before exact validation.  Values
/// within `1e-12` of zero collapse to zero; otherwise the first convergent
/// within `1e-9` relative error wins, and a value with no such convergent
/// falls back to its exact binary expansion.
pub(crate) fn snap_rational(f: f64) -> BigRational {
    if f.abs() < 1e-12 {
        return BigRational::zero();
    }
    let (mut p0, mut q0) = (BigInt::from(1), BigInt::from(0));
    let (mut p1, mut q1) = (BigInt::from(f.floor() as i64), BigInt::from(1));
    let mut rem = f - f.floor();
    for _ in 0..32 {
        let approx = BigRational::new(p1.clone(), q1.clone());
        let back: f64 = rational_to_f64(&approx);
        if (back - f).abs() <= 1e-9 * f.abs().max(1.0) {
            return approx;
        }
        if rem.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / rem;
        let a = inv.floor();
        rem = inv - a;
        let a = BigInt::from(a as i64);
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    BigRational::from_float(f).unwrap_or_else(BigRational::zero)
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// The osculating graded nilpotent Lie algebra at `x`: structure constants
/// `c_{ijk}(x)` restricted to `υ_k = υ_i + υ_j`.
pub fn osculating_algebra(
    chart: &Chart,
    cert: &FrameCertificate,
    x: &[f64],
) -> Result<Arc<LieAlgebra>, ChartError> {
    chart.check_point(x)?;
    let n = cert.dim();
    let weights = cert.graded().weights().to_vec();
    let cube = constants_at(cert, x)?;
    let mut entries = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                if weights[k] == weights[i] + weights[j] && !cube[i][j][k].is_zero() {
                    entries.push(BracketEntry::new(i + 1, j + 1, k + 1, cube[i][j][k].clone()));
                }
            }
        }
    }
    lie_validate(cert.graded().clone(), &entries)
        .map(Arc::new)
        .map_err(|source| ChartError::Osculation {
            x: x.to_vec(),
            source,
        })
}

/// The osculating group law at `x` (BCH on the osculating algebra).
pub fn osculating_group_law(
    chart: &Chart,
    cert: &FrameCertificate,
    x: &[f64],
) -> Result<GroupLaw, ChartError> {
    let alg = osculating_algebra(chart, cert, x)?;
    Ok(group_law(&alg))
}

/// Split the frozen bracket bilinear form at `x` into its weight-additive
/// part `q` and the higher-order rest `r`:
///
/// `[Σ v_i X_i, Σ w_j X_j](x) = Σ_k (q_k(v,w) + r_k(v,w)) X_k(x)`
///
/// Both outputs are polynomials in the `2n` variables `(v_1..v_n,
/// w_1..w_n)`; `q_k` collects the `υ_k = υ_i + υ_j` terms (the osculating
/// bracket) and `r_k` the `υ_k < υ_i + υ_j` ones, whose monomials all have
/// graded degree `υ_i + υ_j > υ_k`.
pub fn higher_order_split(
    chart: &Chart,
    cert: &FrameCertificate,
    x: &[f64],
) -> Result<(Vec<Poly>, Vec<Poly>), ChartError> {
    chart.check_point(x)?;
    let n = cert.dim();
    let weights = cert.graded().weights();
    let cube = constants_at(cert, x)?;
    let mut q = vec![Poly::zero(2 * n); n];
    let mut r = vec![Poly::zero(2 * n); n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = &cube[i][j][k];
                if c.is_zero() {
                    continue;
                }
                let mut exps = vec![0u32; 2 * n];
                exps[i] += 1;
                exps[n + j] += 1;
                let term = Poly::monomial(2 * n, MultiIndex::new(exps), c.clone());
                if weights[k] == weights[i] + weights[j] {
                    q[k] = q[k].add(&term);
                } else {
                    debug_assert!(weights[k] < weights[i] + weights[j]);
                    r[k] = r[k].add(&term);
                }
            }
        }
    }
    Ok((q, r))
}

/// Repackage the split remainder for `higher_order_test`.  The remainder
/// lives in `2n` variables `(v, w)` whose natural weight vector `(υ, υ)` is
/// not ascending, so it is not itself a graded structure; permuting the
/// variables into ascending weight order (stable, `v` block first) and
/// placing component `k` at the permuted slot of variable `k` gives an
/// equivalent vector of polynomials over a genuine doubled grading.
pub fn remainder_embedding(
    r: &[Poly],
    g: &graded_core::GradedStructure,
) -> (Vec<Poly>, graded_core::GradedStructure) {
    let n = g.dim();
    assert_eq!(r.len(), n, "one remainder component per field");
    let w = g.weights();
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by_key(|&i| w[i % n]);
    let mut pos = vec![0usize; 2 * n];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let args: Vec<Poly> = (0..2 * n).map(|i| Poly::var(2 * n, pos[i])).collect();
    let mut out = vec![Poly::zero(2 * n); 2 * n];
    for (k, rk) in r.iter().enumerate() {
        assert_eq!(rk.nvars(), 2 * n);
        out[pos[k]] = rk.compose(&args);
    }
    let weights: Vec<i64> = order.iter().map(|&i| w[i % n] as i64).collect();
    let doubled = graded_core::GradedStructure::new(&weights)
        .expect("sorted weights form a graded structure");
    (out, doubled)
}
