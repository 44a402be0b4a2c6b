//! Normal-form expansion of powers of a symbol-weighted derivation.
//!
//! Work in the free noncommutative setting: `X_1, …, X_n` are formal
//! derivations and `z_1, …, z_n` are formal scalar symbols.  The operator of
//! interest is `Z = Σ_j z_j X_j`.  Expanding `Z^k` and pushing every
//! derivation to the right of every scalar produces a unique normal form
//!
//! ```text
//!     Z^k = Σ_I  a_I · X_{i_1} ⋯ X_{i_ℓ},
//! ```
//!
//! where each coefficient `a_I` is a polynomial in the atoms `X_J z_j`
//! (the scalar obtained by applying the derivation word `J` to the symbol
//! `z_j`).  Two routes to that normal form are implemented:
//!
//! * [`brute_force_expand`] multiplies `Z` on the left `k` times, applying
//!   the Leibniz rule literally; and
//! * [`z_power_expand`] enumerates the combinatorial description of the
//!   result: terms are indexed by splits `[I, I_1, …, I_k]` of the `k`
//!   letters, where `I` (never empty) is the surviving derivation word and
//!   block `I_p` is the derivation word landed on the `p`-th symbol.  Each
//!   letter either survives into the word or is spent deriving a factor
//!   introduced *earlier*, so at least one block — the newest factor's — is
//!   always empty, and no symbol is ever hit by its own derivation.
//!
//! The two must agree exactly; the integration tests pin this down for small
//! `n` and `k`.  [`product_form_check`] reorganizes the expansion a third
//! way, as a sum of families whose length-`ℓ` coefficients factor into `ℓ`
//! per-position scalars, and verifies that the factored families reproduce
//! the expansion.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// A derivation index `1..=n`.
pub type Letter = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NcError {
    /// The level-`len` coefficients could not be written as a sum of
    /// per-position products.  This would falsify the combinatorial
    /// expansion theorem, so the verification suites treat it as fatal.
    #[error("coefficients of the length-{len} derivation words do not factor per position")]
    FactorizationFailure { len: usize },
}

/// The scalar `X_{j_1} ⋯ X_{j_m} z_b`: the symbol `z_b` hit by a word of
/// derivations.  The word order matters and is stored outermost first, so
/// applying `X_j` prepends `j`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Atom {
    word: Vec<Letter>,
    base: Letter,
}

impl Atom {
    pub fn new(word: Vec<Letter>, base: Letter) -> Self {
        Atom { word, base }
    }

    /// The bare symbol `z_b`.
    pub fn symbol(base: Letter) -> Self {
        Atom { word: Vec::new(), base }
    }

    pub fn word(&self) -> &[Letter] {
        &self.word
    }

    pub fn base(&self) -> Letter {
        self.base
    }

    /// Apply the derivation `X_j`, prepending it to the word.
    fn derive(&self, j: Letter) -> Atom {
        let mut word = Vec::with_capacity(self.word.len() + 1);
        word.push(j);
        word.extend_from_slice(&self.word);
        Atom { word, base: self.base }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in &self.word {
            write!(f, "X{j}")?;
        }
        write!(f, "z{}", self.base)
    }
}

/// A product of atoms.  Atoms are scalars, hence commute; the factors are
/// kept sorted so equal products compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<Atom>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn from_atoms(mut atoms: Vec<Atom>) -> Self {
        atoms.sort();
        Monomial(atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    fn times_atom(&self, atom: &Atom) -> Monomial {
        let mut atoms = self.0.clone();
        let pos = atoms.partition_point(|a| a <= atom);
        atoms.insert(pos, atom.clone());
        Monomial(atoms)
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut atoms = self.0.clone();
        atoms.extend_from_slice(&other.0);
        atoms.sort();
        Monomial(atoms)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for atom in &self.0 {
            if !first {
                write!(f, "·")?;
            }
            if atom.word.is_empty() {
                write!(f, "{atom}")?;
            } else {
                write!(f, "({atom})")?;
            }
            first = false;
        }
        Ok(())
    }
}

/// An integer combination of atom products: the coefficient ring of the
/// expansion.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScalarPoly {
    terms: BTreeMap<Monomial, i64>,
}

impl ScalarPoly {
    pub fn zero() -> Self {
        ScalarPoly::default()
    }

    pub fn one() -> Self {
        let mut p = ScalarPoly::default();
        p.add_term(Monomial::one(), 1);
        p
    }

    /// The bare symbol `z_b` as a polynomial.
    pub fn symbol(base: Letter) -> Self {
        let mut p = ScalarPoly::default();
        p.add_term(Monomial::from_atoms(vec![Atom::symbol(base)]), 1);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, i64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> i64 {
        self.terms.get(m).copied().unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: i64) {
        use std::collections::btree_map::Entry;
        if c == 0 {
            return;
        }
        match self.terms.entry(m) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0 {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add(&self, other: &ScalarPoly) -> ScalarPoly {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &ScalarPoly) -> ScalarPoly {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn mul(&self, other: &ScalarPoly) -> ScalarPoly {
        let mut out = ScalarPoly::default();
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                out.add_term(ma.times(mb), ca * cb);
            }
        }
        out
    }

    /// Apply the derivation `X_j` by the Leibniz rule: each atom in each
    /// product gets the extra outermost letter in turn.
    fn derive(&self, j: Letter) -> ScalarPoly {
        let mut out = ScalarPoly::default();
        for (m, c) in self.terms() {
            for (pos, atom) in m.atoms().iter().enumerate() {
                let mut atoms: Vec<Atom> = m.atoms().to_vec();
                atoms[pos] = atom.derive(j);
                out.add_term(Monomial::from_atoms(atoms), c);
            }
        }
        out
    }
}

impl fmt::Display for ScalarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms() {
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else if c < 0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            if mag != 1 || m.atoms().is_empty() {
                write!(f, "{mag}")?;
                if !m.atoms().is_empty() {
                    write!(f, "·")?;
                }
            }
            if !m.atoms().is_empty() {
                write!(f, "{m}")?;
            }
            first = false;
        }
        Ok(())
    }
}

/// A word `X_{i_1} ⋯ X_{i_ℓ}` of derivations, outermost first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NCWord(Vec<Letter>);

impl NCWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        NCWord(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for NCWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for j in &self.0 {
            write!(f, "X{j}")?;
        }
        Ok(())
    }
}

/// The normal form of `Z^k` over `n` symbols: a map from derivation words to
/// their scalar coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivationExpansion {
    n: usize,
    k: u32,
    terms: BTreeMap<NCWord, ScalarPoly>,
}

impl DerivationExpansion {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn terms(&self) -> impl Iterator<Item = (&NCWord, &ScalarPoly)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, word: &NCWord) -> ScalarPoly {
        self.terms.get(word).cloned().unwrap_or_default()
    }

    /// The part of the expansion whose derivation words have length `len`.
    pub fn level(&self, len: usize) -> impl Iterator<Item = (&NCWord, &ScalarPoly)> {
        self.terms.iter().filter(move |(w, _)| w.len() == len)
    }

    fn insert(&mut self, word: NCWord, monomial: Monomial, count: i64) {
        // Counts only ever accumulate positively, so no coefficient can
        // cancel to zero and leave a hollow entry behind.
        debug_assert!(count > 0);
        self.terms.entry(word).or_default().add_term(monomial, count);
    }
}

/// Expand `Z^k` the slow, unquestionable way: start from `Z` and multiply by
/// `Z` on the left `k-1` times, pushing each `z_j X_j` through with the
/// Leibniz rule.
pub fn brute_force_expand(n: usize, k: u32) -> DerivationExpansion {
    assert!(n >= 1, "need at least one symbol");
    assert!(k >= 1, "need at least one factor of Z");
    let mut exp = DerivationExpansion { n, k: 1, terms: BTreeMap::new() };
    for j in 1..=n {
        exp.insert(NCWord::new(vec![j]), Monomial::from_atoms(vec![Atom::symbol(j)]), 1);
    }
    for _ in 1..k {
        let mut next = DerivationExpansion { n, k: exp.k + 1, terms: BTreeMap::new() };
        for (word, coeff) in exp.terms() {
            for j in 1..=n {
                let zj = Atom::symbol(j);
                // z_j · (X_j coeff) · X_word
                for (m, c) in coeff.derive(j).terms() {
                    next.insert(word.clone(), m.times_atom(&zj), c);
                }
                // z_j · coeff · X_j X_word
                let mut letters = Vec::with_capacity(word.len() + 1);
                letters.push(j);
                letters.extend_from_slice(word.letters());
                for (m, c) in coeff.terms() {
                    next.insert(NCWord::new(letters.clone()), m.times_atom(&zj), c);
                }
            }
        }
        exp = next;
    }
    exp
}

/// One way the `k` letters of `Z^k` can organize.
///
/// Letters are numbered by the factor of `Z` they come from, `0` for the
/// innermost (rightmost) factor up to `k-1` for the outermost.  `word`
/// lists the letters that survive as derivations, outermost first;
/// `blocks[s]` lists the letters spent deriving the symbol of letter `s`,
/// outermost first.  Every letter appears exactly once across `word` and
/// the blocks.
#[derive(Debug, Clone)]
struct SlotConfig {
    word: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

/// Enumerate the splits by running the Leibniz recursion structurally: the
/// innermost letter survives; each further letter either joins the front of
/// the surviving word or lands on the symbol of one earlier letter.  The
/// word is therefore never empty, the newest letter's own block is always
/// empty, and a block only ever holds letters newer than its owner — in
/// particular no symbol is derived by its own letter.
fn slot_configs(k: usize) -> Vec<SlotConfig> {
    let mut level = vec![SlotConfig { word: vec![0], blocks: vec![Vec::new()] }];
    for t in 1..k {
        let mut next = Vec::with_capacity(level.len() * (t + 1));
        for cfg in &level {
            let mut word = Vec::with_capacity(cfg.word.len() + 1);
            word.push(t);
            word.extend_from_slice(&cfg.word);
            let mut blocks = cfg.blocks.clone();
            blocks.push(Vec::new());
            next.push(SlotConfig { word, blocks });
            for p in 0..t {
                let mut blocks = cfg.blocks.clone();
                blocks[p].insert(0, t);
                blocks.push(Vec::new());
                next.push(SlotConfig { word: cfg.word.clone(), blocks });
            }
        }
        level = next;
    }
    level
}

/// Iterate over all tuples `(j_1, …, j_k)` with entries in `1..=n`.
fn tuples(n: usize, k: usize) -> impl Iterator<Item = Vec<Letter>> {
    let total = n.pow(k as u32);
    (0..total).map(move |mut code| {
        let mut t = vec![0; k];
        for slot in t.iter_mut().rev() {
            *slot = code % n + 1;
            code /= n;
        }
        t
    })
}

/// Expand `Z^k` by the combinatorial description: sum over the splits
/// `[I, I_1, …, I_k]` of the letters, each split contributing the monomial
/// `(X_{I_1} z_{j_1}) ⋯ (X_{I_k} z_{j_k})` on the derivation word `X_I` for
/// every assignment of values `1..=n` to the letters.
pub fn z_power_expand(n: usize, k: u32) -> DerivationExpansion {
    assert!(n >= 1, "need at least one symbol");
    assert!(k >= 1, "need at least one factor of Z");
    let k_us = k as usize;
    let mut exp = DerivationExpansion { n, k, terms: BTreeMap::new() };
    for cfg in slot_configs(k_us) {
        for values in tuples(n, k_us) {
            let letter = |s: usize| values[s];
            let word = NCWord::new(cfg.word.iter().map(|&s| letter(s)).collect());
            let atoms = cfg
                .blocks
                .iter()
                .enumerate()
                .map(|(s, block)| {
                    Atom::new(block.iter().map(|&b| letter(b)).collect(), letter(s))
                })
                .collect();
            exp.insert(word, Monomial::from_atoms(atoms), 1);
        }
    }
    exp
}

/// A factored family: a batch of expansion terms with derivation words of
/// one common length `ℓ` whose coefficient over the word `(j_1, …, j_ℓ)` is
/// the product `factors[0][j_1-1] ⋯ factors[ℓ-1][j_ℓ-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorFamily {
    word_len: usize,
    factors: Vec<Vec<ScalarPoly>>,
}

impl FactorFamily {
    pub fn word_len(&self) -> usize {
        self.word_len
    }

    /// `factors()[p][j-1]` is the factor at word position `p` for letter `j`.
    pub fn factors(&self) -> &[Vec<ScalarPoly>] {
        &self.factors
    }

    /// The coefficient this family assigns to a derivation word.
    pub fn coefficient(&self, word: &NCWord) -> ScalarPoly {
        assert_eq!(word.len(), self.word_len);
        let mut out = ScalarPoly::one();
        for (p, &j) in word.letters().iter().enumerate() {
            out = out.mul(&self.factors[p][j - 1]);
        }
        out
    }
}

/// Reorganize the expansion into factored families and verify that they
/// reproduce it.
///
/// Each split induces an ownership forest on the letters: a letter inside
/// block `I_s` is owned by the letter `s`, and the letters of the surviving
/// word are the roots.  Summing the owned letters within each tree yields
/// one scalar per root letter, so every split contributes a family whose
/// coefficients factor position by position.  The families summed over each
/// word length must equal the corresponding level of the expansion; a
/// mismatch is reported as [`NcError::FactorizationFailure`].
pub fn product_form_check(exp: &DerivationExpansion) -> Result<Vec<FactorFamily>, NcError> {
    let n = exp.n();
    let k = exp.k() as usize;
    let mut families = Vec::new();
    for cfg in slot_configs(k) {
        let factors = cfg
            .word
            .iter()
            .map(|&root| (1..=n).map(|j| tree_factor(&cfg.blocks, root, j, n)).collect())
            .collect();
        families.push(FactorFamily { word_len: cfg.word.len(), factors });
    }
    for len in 1..=k {
        let mut reconstructed: BTreeMap<NCWord, ScalarPoly> = BTreeMap::new();
        for family in families.iter().filter(|f| f.word_len == len) {
            for tuple in tuples(n, len) {
                let word = NCWord::new(tuple);
                let total = reconstructed.entry(word.clone()).or_default();
                *total = total.add(&family.coefficient(&word));
            }
        }
        for tuple in tuples(n, len) {
            let word = NCWord::new(tuple);
            let got = reconstructed.get(&word).cloned().unwrap_or_default();
            if got != exp.coefficient(&word) {
                return Err(NcError::FactorizationFailure { len });
            }
        }
    }
    Ok(families)
}

/// The scalar collected over the ownership tree rooted at letter `s` when
/// its value is `j`: sum over the values of the owned letters of the root's
/// atom times the subtree factors.
fn tree_factor(blocks: &[Vec<usize>], s: usize, j: Letter, n: usize) -> ScalarPoly {
    let kids = &blocks[s];
    if kids.is_empty() {
        return ScalarPoly::symbol(j);
    }
    let mut out = ScalarPoly::zero();
    for assignment in tuples(n, kids.len()) {
        let atom = Atom::new(assignment.clone(), j);
        let mut term = ScalarPoly::default();
        term.add_term(Monomial::from_atoms(vec![atom]), 1);
        for (&kid, &value) in kids.iter().zip(&assignment) {
            term = term.mul(&tree_factor(blocks, kid, value, n));
        }
        out = out.add(&term);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_power_is_z_itself() {
        let exp = z_power_expand(3, 1);
        assert_eq!(exp.terms().count(), 3);
        for j in 1..=3 {
            let coeff = exp.coefficient(&NCWord::new(vec![j]));
            assert_eq!(coeff, ScalarPoly::symbol(j));
        }
    }

    #[test]
    fn square_has_the_two_expected_shapes() {
        // Z² = Σ z_a z_b X_a X_b + Σ (X_b z_a) z_b X_a, both sums over all
        // pairs (a, b), including a = b.
        let exp = z_power_expand(2, 2);
        for a in 1..=2usize {
            for b in 1..=2usize {
                let quadratic = exp.coefficient(&NCWord::new(vec![a, b]));
                let expected =
                    Monomial::from_atoms(vec![Atom::symbol(a), Atom::symbol(b)]);
                assert_eq!(quadratic.coeff(&expected), 1);
                assert_eq!(quadratic.num_terms(), 1);
            }
            let linear = exp.coefficient(&NCWord::new(vec![a]));
            assert_eq!(linear.num_terms(), 2);
            for b in 1..=2usize {
                let m = Monomial::from_atoms(vec![Atom::new(vec![b], a), Atom::symbol(b)]);
                assert_eq!(linear.coeff(&m), 1, "missing (X{b} z{a})·z{b}");
            }
        }
    }

    #[test]
    fn derivation_words_survive_only_with_all_blocks_placed() {
        // Every split keeps the word nonempty and leaves at least one block
        // empty, so Z^k has words of every length 1..=k and nothing else.
        let exp = z_power_expand(2, 3);
        let lengths: std::collections::BTreeSet<usize> =
            exp.terms().map(|(w, _)| w.len()).collect();
        assert_eq!(lengths, (1..=3).collect());
    }

    #[test]
    fn atom_words_are_ordered() {
        // X₁X₂z₁ and X₂X₁z₁ are different scalars: the expansion of Z³ over
        // one symbol keeps second derivatives with the outermost letter
        // first, never sorted.
        let exp = brute_force_expand(1, 3);
        let coeff = exp.coefficient(&NCWord::new(vec![1]));
        let twice = Monomial::from_atoms(vec![
            Atom::new(vec![1, 1], 1),
            Atom::symbol(1),
            Atom::symbol(1),
        ]);
        assert_eq!(coeff.coeff(&twice), 1);
        let chain = Monomial::from_atoms(vec![
            Atom::new(vec![1], 1),
            Atom::new(vec![1], 1),
            Atom::symbol(1),
        ]);
        assert_eq!(coeff.coeff(&chain), 1);
    }

    #[test]
    fn leibniz_doubles_repeated_atoms() {
        let p = ScalarPoly::symbol(1).mul(&ScalarPoly::symbol(1));
        let dp = p.derive(2);
        let m = Monomial::from_atoms(vec![Atom::new(vec![2], 1), Atom::symbol(1)]);
        assert_eq!(dp.coeff(&m), 2);
        assert_eq!(dp.num_terms(), 1);
    }

    #[test]
    fn display_uses_atom_notation() {
        let exp = z_power_expand(2, 2);
        let linear = exp.coefficient(&NCWord::new(vec![1]));
        let shown = linear.to_string();
        assert!(shown.contains("z1·(X1z1)"), "got {shown}");
        assert!(shown.contains("z2·(X2z1)"), "got {shown}");
        assert_eq!(NCWord::new(vec![2, 1]).to_string(), "X2X1");
    }

    #[test]
    fn factor_families_for_the_square() {
        let exp = z_power_expand(3, 2);
        let families = product_form_check(&exp).unwrap();
        assert_eq!(families.len(), 2);
        let linear: Vec<_> = families.iter().filter(|f| f.word_len() == 1).collect();
        let quadratic: Vec<_> = families.iter().filter(|f| f.word_len() == 2).collect();
        assert_eq!((linear.len(), quadratic.len()), (1, 1));
        // The quadratic family is z_{j1} z_{j2}; the linear one is Σ_b (X_b z_j) z_b.
        for j in 1..=3usize {
            assert_eq!(quadratic[0].factors()[0][j - 1], ScalarPoly::symbol(j));
            assert_eq!(quadratic[0].factors()[1][j - 1], ScalarPoly::symbol(j));
            assert_eq!(linear[0].factors()[0][j - 1].num_terms(), 3);
        }
    }
}
