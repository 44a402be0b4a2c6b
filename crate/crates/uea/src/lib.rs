//! Universal enveloping algebra of a graded nilpotent Lie algebra in its
//! Poincaré–Birkhoff–Witt basis: normal ordering of generator words,
//! products, homogeneous components, and the standard Rockland-type
//! candidate element.
//!
//! Basis monomials are written `⟨X⟩^α = X_1^{α₁} ⋯ X_n^{αₙ}`; an arbitrary
//! word is brought to this form by the rewriting rule
//! `X_i X_j = X_j X_i + [X_i, X_j]`, which terminates because each emitted
//! bracket word is strictly shorter.

use graded_core::MultiIndex;
use nilpotent_group::LieAlgebra;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UeaError {
    #[error("elements belong to different algebras")]
    AlgebraMismatch,
    #[error("generator index {i} out of range for dimension {n}")]
    GeneratorOutOfRange { i: usize, n: usize },
    #[error("{m0} is not a common multiple of the weights")]
    NotCommonMultiple { m0: u32 },
}

/// Element of the universal enveloping algebra, stored as a finitely
/// supported rational combination of PBW basis monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct UEAElement {
    alg: Arc<LieAlgebra>,
    coeffs: BTreeMap<MultiIndex, BigRational>,
}

impl UEAElement {
    pub fn zero(alg: &Arc<LieAlgebra>) -> Self {
        UEAElement {
            alg: Arc::clone(alg),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one(alg: &Arc<LieAlgebra>) -> Self {
        Self::monomial(alg, MultiIndex::zero(alg.dim()), BigRational::one())
    }

    pub fn monomial(alg: &Arc<LieAlgebra>, alpha: MultiIndex, c: BigRational) -> Self {
        assert_eq!(alpha.dim(), alg.dim(), "multi-index dimension mismatch");
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(alpha, c);
        }
        UEAElement {
            alg: Arc::clone(alg),
            coeffs,
        }
    }

    /// The generator ⟨X_j⟩, indexed 1-based like the basis `V_j`.
    pub fn generator(alg: &Arc<LieAlgebra>, j: usize) -> Result<Self, UeaError> {
        if j == 0 || j > alg.dim() {
            return Err(UeaError::GeneratorOutOfRange { i: j, n: alg.dim() });
        }
        Ok(Self::monomial(
            alg,
            MultiIndex::unit(alg.dim(), j - 1),
            BigRational::one(),
        ))
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.alg
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> BigRational {
        self.coeffs.get(alpha).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest graded degree in the support, or `None` for the zero element.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs
            .keys()
            .map(|a| a.degree(self.alg.graded()))
            .max()
    }

    /// True when every supported monomial has graded degree `n`.
    pub fn is_homogeneous(&self, n: u32) -> bool {
        self.coeffs
            .keys()
            .all(|a| a.degree(self.alg.graded()) == n)
    }

    fn check_same(&self, other: &Self) -> Result<(), UeaError> {
        if Arc::ptr_eq(&self.alg, &other.alg) || self.alg == other.alg {
            Ok(())
        } else {
            Err(UeaError::AlgebraMismatch)
        }
    }

    fn insert_add(&mut self, alpha: MultiIndex, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(alpha) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, UeaError> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (a, c) in &other.coeffs {
            out.insert_add(a.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, UeaError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-BigRational::one())
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(&self.alg);
        }
        UEAElement {
            alg: Arc::clone(&self.alg),
            coeffs: self
                .coeffs
                .iter()
                .map(|(a, x)| (a.clone(), x * c))
                .collect(),
        }
    }
}

impl fmt::Display for UEAElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (alpha, c) in self.coeffs.iter().rev() {
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut factors = Vec::new();
            if !mag.is_one() || alpha.len() == 0 {
                factors.push(format!("{mag}"));
            }
            for (i, &a) in alpha.entries().iter().enumerate() {
                match a {
                    0 => {}
                    1 => factors.push(format!("X{}", i + 1)),
                    _ => factors.push(format!("X{}^{}", i + 1, a)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// Normal form of the generator word `X_{i₁} ⋯ X_{i_ℓ}` (letters 1-based).
///
/// Bubble-sorts from the left: the first out-of-order adjacent pair is
/// transposed, emitting the bracket `[X_i, X_j] = Σ_k c_{ijk} X_k` as a
/// strictly shorter word. Termination: (length, inversion count) decreases
/// lexicographically at every step.
pub fn pbw_normalize(alg: &Arc<LieAlgebra>, word: &[usize]) -> Result<UEAElement, UeaError> {
    let n = alg.dim();
    for &i in word {
        if i == 0 || i > n {
            return Err(UeaError::GeneratorOutOfRange { i, n });
        }
    }
    let word0: Vec<usize> = word.iter().map(|&i| i - 1).collect();
    let mut out = UEAElement::zero(alg);
    let mut stack: Vec<(Vec<usize>, BigRational)> = vec![(word0, BigRational::one())];
    while let Some((w, c)) = stack.pop() {
        match first_inversion(&w) {
            None => {
                let mut entries = vec![0u32; n];
                for &i in &w {
                    entries[i] += 1;
                }
                out.insert_add(MultiIndex::new(entries), c);
            }
            Some(p) => {
                let (i, j) = (w[p], w[p + 1]);
                let mut swapped = w.clone();
                swapped.swap(p, p + 1);
                for k in 0..n {
                    let cijk = alg.c(i, j, k);
                    if cijk.is_zero() {
                        continue;
                    }
                    let mut shorter = Vec::with_capacity(w.len() - 1);
                    shorter.extend_from_slice(&w[..p]);
                    shorter.push(k);
                    shorter.extend_from_slice(&w[p + 2..]);
                    stack.push((shorter, &c * cijk));
                }
                stack.push((swapped, c));
            }
        }
    }
    Ok(out)
}

fn first_inversion(w: &[usize]) -> Option<usize> {
    (0..w.len().saturating_sub(1)).find(|&p| w[p] > w[p + 1])
}

/// Bilinear product: concatenate PBW words and renormalize.
pub fn uea_multiply(a: &UEAElement, b: &UEAElement) -> Result<UEAElement, UeaError> {
    a.check_same(b)?;
    let mut out = UEAElement::zero(&a.alg);
    for (alpha, ca) in &a.coeffs {
        for (beta, cb) in &b.coeffs {
            let mut word: Vec<usize> = alpha.to_word().iter().map(|&i| i + 1).collect();
            word.extend(beta.to_word().iter().map(|&i| i + 1));
            let prod = pbw_normalize(&a.alg, &word)?;
            for (gamma, c) in prod.coeffs {
                out.insert_add(gamma, c * ca * cb);
            }
        }
    }
    Ok(out)
}

/// Restriction of the support to graded degree exactly `n`.
pub fn hom_component(a: &UEAElement, n: u32) -> UEAElement {
    let g = a.alg.graded();
    UEAElement {
        alg: Arc::clone(&a.alg),
        coeffs: a
            .coeffs
            .iter()
            .filter(|(alpha, _)| alpha.degree(g) == n)
            .map(|(alpha, c)| (alpha.clone(), c.clone()))
            .collect(),
    }
}

/// The element `Σ_j (−1)^{M₀/υ_j} ⟨X_j⟩^{2M₀/υ_j}`, homogeneous of degree
/// `2M₀`; `m0` must be a common multiple of the weights.
pub fn rockland_candidate(alg: &Arc<LieAlgebra>, m0: u32) -> Result<UEAElement, UeaError> {
    let g = alg.graded();
    if m0 == 0 || g.weights().iter().any(|&w| m0 % w != 0) {
        return Err(UeaError::NotCommonMultiple { m0 });
    }
    let mut out = UEAElement::zero(alg);
    for j in 0..alg.dim() {
        let e = m0 / g.weight(j);
        let sign = if e % 2 == 0 {
            BigRational::one()
        } else {
            -BigRational::one()
        };
        let mut entries = vec![0u32; alg.dim()];
        entries[j] = 2 * e;
        out.insert_add(MultiIndex::new(entries), sign);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nilpotent_group::samples;
    use num_bigint::BigInt;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(d))
    }

    fn mi(entries: &[u32]) -> MultiIndex {
        MultiIndex::new(entries.to_vec())
    }

    #[test]
    fn single_transposition_on_heisenberg() {
        let alg = Arc::new(samples::heisenberg());
        let e = pbw_normalize(&alg, &[2, 1]).unwrap();
        assert_eq!(e.coeff(&mi(&[1, 1, 0])), q(1, 1));
        assert_eq!(e.coeff(&mi(&[0, 0, 1])), q(-1, 1));
        assert_eq!(e.num_terms(), 2);
        assert_eq!(e.to_string(), "X1*X2 - X3");
    }

    #[test]
    fn ordered_words_are_fixed_points() {
        let alg = Arc::new(samples::engel());
        for word in [vec![1, 1, 2], vec![2, 3, 4], vec![1, 2, 2, 3], vec![]] {
            let e = pbw_normalize(&alg, &word).unwrap();
            let mut entries = vec![0u32; 4];
            for &i in &word {
                entries[i - 1] += 1;
            }
            assert_eq!(e, UEAElement::monomial(&alg, mi(&entries), q(1, 1)));
        }
    }

    #[test]
    fn generator_products_on_heisenberg() {
        let alg = Arc::new(samples::heisenberg());
        let x1 = UEAElement::generator(&alg, 1).unwrap();
        let x2 = UEAElement::generator(&alg, 2).unwrap();
        let forward = uea_multiply(&x1, &x2).unwrap();
        assert_eq!(forward, UEAElement::monomial(&alg, mi(&[1, 1, 0]), q(1, 1)));
        let backward = uea_multiply(&x2, &x1).unwrap();
        assert_eq!(backward.coeff(&mi(&[1, 1, 0])), q(1, 1));
        assert_eq!(backward.coeff(&mi(&[0, 0, 1])), q(-1, 1));
        // X1X2 − X2X1 = X3 = [X1, X2]
        assert_eq!(
            forward.sub(&backward).unwrap(),
            UEAElement::generator(&alg, 3).unwrap()
        );
    }

    #[test]
    fn homogeneous_components_partition_the_element() {
        let alg = Arc::new(samples::heisenberg());
        let e = pbw_normalize(&alg, &[2, 1]).unwrap(); // X1X2 − X3, all degree 2
        assert_eq!(hom_component(&e, 2), e);
        assert!(hom_component(&e, 1).is_zero());

        let x1 = UEAElement::generator(&alg, 1).unwrap();
        let x3 = UEAElement::generator(&alg, 3).unwrap();
        let s = x1.add(&x3).unwrap();
        assert_eq!(hom_component(&s, 1), x1);
        assert_eq!(hom_component(&s, 2), x3);

        let mut reassembled = UEAElement::zero(&alg);
        for n in 0..=s.degree().unwrap() {
            reassembled = reassembled.add(&hom_component(&s, n)).unwrap();
        }
        assert_eq!(reassembled, s);
    }

    #[test]
    fn rockland_candidates_match_the_formula() {
        let heis = Arc::new(samples::heisenberg());
        let r = rockland_candidate(&heis, 2).unwrap();
        assert_eq!(r.coeff(&mi(&[4, 0, 0])), q(1, 1));
        assert_eq!(r.coeff(&mi(&[0, 4, 0])), q(1, 1));
        assert_eq!(r.coeff(&mi(&[0, 0, 2])), q(-1, 1));
        assert_eq!(r.num_terms(), 3);
        assert!(r.is_homogeneous(4));
        assert_eq!(r.to_string(), "X1^4 + X2^4 - X3^2");

        let line = Arc::new(samples::abelian(1));
        let r1 = rockland_candidate(&line, 1).unwrap();
        assert_eq!(r1.to_string(), "-X1^2");

        let engel = Arc::new(samples::engel());
        let r6 = rockland_candidate(&engel, 6).unwrap();
        assert!(r6.is_homogeneous(12));
        assert_eq!(r6.degree(), Some(12));

        assert_eq!(
            rockland_candidate(&heis, 3).unwrap_err(),
            UeaError::NotCommonMultiple { m0: 3 }
        );
    }

    #[test]
    fn words_reject_out_of_range_letters() {
        let alg = Arc::new(samples::heisenberg());
        assert_eq!(
            pbw_normalize(&alg, &[1, 4]).unwrap_err(),
            UeaError::GeneratorOutOfRange { i: 4, n: 3 }
        );
        assert!(UEAElement::generator(&alg, 0).is_err());
    }

    #[test]
    fn mismatched_algebras_are_rejected() {
        let a = Arc::new(samples::heisenberg());
        let b = Arc::new(samples::engel());
        let xa = UEAElement::generator(&a, 1).unwrap();
        let xb = UEAElement::generator(&b, 1).unwrap();
        assert_eq!(uea_multiply(&xa, &xb).unwrap_err(), UeaError::AlgebraMismatch);
        assert_eq!(xa.add(&xb).unwrap_err(), UeaError::AlgebraMismatch);
    }

    /// Normalizing by always clearing the rightmost inversion instead of the
    /// leftmost must give the same normal form (PBW uniqueness).
    fn normalize_rightmost(alg: &Arc<LieAlgebra>, word: &[usize]) -> UEAElement {
        let n = alg.dim();
        let mut out = UEAElement::zero(alg);
        let mut stack: Vec<(Vec<usize>, BigRational)> =
            vec![(word.iter().map(|&i| i - 1).collect(), BigRational::one())];
        while let Some((w, c)) = stack.pop() {
            let inv = (0..w.len().saturating_sub(1)).rev().find(|&p| w[p] > w[p + 1]);
            match inv {
                None => {
                    let mut entries = vec![0u32; n];
                    for &i in &w {
                        entries[i] += 1;
                    }
                    let m = UEAElement::monomial(alg, MultiIndex::new(entries), c);
                    out = out.add(&m).unwrap();
                }
                Some(p) => {
                    let (i, j) = (w[p], w[p + 1]);
                    let mut swapped = w.clone();
                    swapped.swap(p, p + 1);
                    stack.push((swapped, c.clone()));
                    for k in 0..n {
                        let cijk = alg.c(i, j, k);
                        if cijk.is_zero() {
                            continue;
                        }
                        let mut shorter = w[..p].to_vec();
                        shorter.push(k);
                        shorter.extend_from_slice(&w[p + 2..]);
                        stack.push((shorter, &c * cijk));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn rewriting_order_does_not_matter() {
        let engel = Arc::new(samples::engel());
        let words: [&[usize]; 6] = [
            &[2, 1],
            &[3, 1, 2],
            &[3, 2, 1],
            &[4, 3, 2, 1],
            &[2, 1, 2, 1],
            &[3, 1, 3, 1, 2],
        ];
        for word in words {
            assert_eq!(
                pbw_normalize(&engel, word).unwrap(),
                normalize_rightmost(&engel, word),
                "word {word:?}"
            );
        }
    }
}
