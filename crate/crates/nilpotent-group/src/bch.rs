//! Truncated Baker–Campbell–Hausdorff series via the Dynkin double sum,
//! evaluated with exact rational coefficients.
//!
//! The same enumeration drives two consumers: numeric evaluation on
//! coordinate vectors ([`bch_truncated`]) and symbolic evaluation on vectors
//! of polynomials (the group law in `law.rs`). Both are generic over
//! [`LieOps`], which supplies the module structure and the bracket.

use crate::poly::Poly;
use crate::{LieAlgebra, LieAlgebraError, LieElement};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeMap;
use std::sync::Arc;

pub(crate) trait LieOps {
    type Elt: Clone;
    fn zero(&self) -> Self::Elt;
    fn is_zero(&self, a: &Self::Elt) -> bool;
    fn add_assign(&self, a: &mut Self::Elt, b: &Self::Elt);
    fn scale(&self, r: &BigRational, a: &Self::Elt) -> Self::Elt;
    fn bracket(&self, a: &Self::Elt, b: &Self::Elt) -> Self::Elt;
}

/// Coordinate vectors over the rationals.
pub(crate) struct VecOps<'a>(pub &'a LieAlgebra);

impl LieOps for VecOps<'_> {
    type Elt = Vec<BigRational>;

    fn zero(&self) -> Self::Elt {
        vec![BigRational::zero(); self.0.dim()]
    }

    fn is_zero(&self, a: &Self::Elt) -> bool {
        a.iter().all(Zero::is_zero)
    }

    fn add_assign(&self, a: &mut Self::Elt, b: &Self::Elt) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
    }

    fn scale(&self, r: &BigRational, a: &Self::Elt) -> Self::Elt {
        a.iter().map(|x| x * r).collect()
    }

    fn bracket(&self, a: &Self::Elt, b: &Self::Elt) -> Self::Elt {
        self.0.bracket(a, b)
    }
}

/// Vectors of polynomials (for the symbolic group law).
pub(crate) struct PolyVecOps<'a> {
    pub alg: &'a LieAlgebra,
    pub nvars: usize,
}

impl LieOps for PolyVecOps<'_> {
    type Elt = Vec<Poly>;

    fn zero(&self) -> Self::Elt {
        vec![Poly::zero(self.nvars); self.alg.dim()]
    }

    fn is_zero(&self, a: &Self::Elt) -> bool {
        a.iter().all(Poly::is_zero)
    }

    fn add_assign(&self, a: &mut Self::Elt, b: &Self::Elt) {
        for (x, y) in a.iter_mut().zip(b) {
            *x = x.add(y);
        }
    }

    fn scale(&self, r: &BigRational, a: &Self::Elt) -> Self::Elt {
        a.iter().map(|x| x.scale(r)).collect()
    }

    fn bracket(&self, a: &Self::Elt, b: &Self::Elt) -> Self::Elt {
        let mut out = vec![Poly::zero(self.nvars); self.alg.dim()];
        for (&(i, j, k), c) in self.alg.nonzero_c() {
            if a[i].is_zero() || b[j].is_zero() {
                continue;
            }
            out[k] = out[k].add(&a[i].mul(&b[j]).scale(c));
        }
        out
    }
}

/// Letters of a bracket word: `false` = first argument, `true` = second.
type Word = Vec<bool>;

fn factorial(k: u32) -> BigInt {
    (1..=k).map(BigInt::from).product()
}

/// Aggregate the Dynkin coefficients per bracket word of length ≤ `max_len`.
///
/// The Dynkin form is
///   Σ_{k≥1} (−1)^{k+1}/k Σ 1/(m · Π αᵢ!βᵢ!) · [A^{α₁}B^{β₁}…A^{α_k}B^{β_k}]
/// over block sequences with αᵢ+βᵢ ≥ 1 and m = Σ(αᵢ+βᵢ); the bracket word
/// [w₁…w_m] means ad_{w₁}∘…∘ad_{w_{m−1}}(w_m). Many block sequences produce
/// the same word, so their rational coefficients are summed here once and
/// reused for every evaluation.
fn dynkin_word_coefficients(max_len: u32) -> BTreeMap<Word, BigRational> {
    let mut acc: BTreeMap<Word, BigRational> = BTreeMap::new();
    let mut word = Vec::new();
    extend_blocks(&mut acc, &mut word, 0, BigInt::from(1), max_len);
    acc.retain(|_, c| !c.is_zero());
    acc
}

fn extend_blocks(
    acc: &mut BTreeMap<Word, BigRational>,
    word: &mut Word,
    k: u32,
    fact_prod: BigInt,
    max_len: u32,
) {
    let used = word.len() as u32;
    for a in 0..=(max_len - used) {
        for b in 0..=(max_len - used - a) {
            if a + b == 0 {
                continue;
            }
            word.extend(std::iter::repeat(false).take(a as usize));
            word.extend(std::iter::repeat(true).take(b as usize));
            let fp = &fact_prod * factorial(a) * factorial(b);
            let blocks = k + 1;
            let m = word.len() as u32;
            let sign = if blocks % 2 == 1 { 1 } else { -1 };
            let coeff = BigRational::new(
                BigInt::from(sign),
                BigInt::from(blocks) * BigInt::from(m) * &fp,
            );
            let entry = acc.entry(word.clone()).or_insert_with(BigRational::zero);
            *entry += coeff;
            extend_blocks(acc, word, blocks, fp, max_len);
            word.truncate(used as usize);
        }
    }
}

/// Right-nested bracket of the word: ad_{w₁}…ad_{w_{m−1}}(w_m).
fn evaluate_word<O: LieOps>(ops: &O, a: &O::Elt, b: &O::Elt, word: &Word) -> O::Elt {
    let letter = |is_b: bool| if is_b { b } else { a };
    let mut acc = letter(*word.last().unwrap()).clone();
    for &w in word[..word.len() - 1].iter().rev() {
        if ops.is_zero(&acc) {
            return acc;
        }
        acc = ops.bracket(letter(w), &acc);
    }
    acc
}

pub(crate) fn bch_generic<O: LieOps>(
    ops: &O,
    a: &O::Elt,
    b: &O::Elt,
    n_max: u32,
    lie_step: u32,
) -> O::Elt {
    // Bracket words longer than the Lie step vanish identically, so the
    // cap never needs to exceed it; for n_max ≥ step the result is exact.
    let cap = n_max.min(lie_step).max(1);
    let mut out = ops.zero();
    for (word, coeff) in dynkin_word_coefficients(cap) {
        let m = word.len();
        // [ …, [C, C] ] = 0 whenever the innermost pair repeats a letter.
        if m >= 2 && word[m - 1] == word[m - 2] {
            continue;
        }
        let value = evaluate_word(ops, a, b, &word);
        if ops.is_zero(&value) {
            continue;
        }
        let scaled = ops.scale(&coeff, &value);
        ops.add_assign(&mut out, &scaled);
    }
    out
}

/// `BCH_N(A, B)`: the Dynkin series truncated to bracket words with at most
/// `N` letters. For `N ≥` the algebra's nilpotency step this is the exact
/// logarithm of `exp A · exp B`.
pub fn bch_truncated(
    a: &LieElement,
    b: &LieElement,
    n: u32,
) -> Result<LieElement, LieAlgebraError> {
    assert!(n >= 1, "truncation order must be at least 1");
    a.check_same(b)?;
    let alg = a.algebra();
    let ops = VecOps(alg);
    let coeffs = bch_generic(&ops, &a.coeffs, &b.coeffs, n, alg.step());
    Ok(LieElement {
        alg: Arc::clone(alg),
        coeffs,
    })
}
