use std::collections::BTreeSet;
use std::sync::Arc;

use free_ncalg::{
    brute_force_expand, product_form_check, z_power_expand, DerivationExpansion, Letter,
};
use nilpotent_group::{group_law, invariant_fields, samples, Poly, PolyVectorField, Side};
use num_rational::BigRational;

#[test]
fn closed_form_matches_brute_force() {
    for n in 1..=3 {
        for k in 1..=3 {
            assert_eq!(
                z_power_expand(n, k),
                brute_force_expand(n, k),
                "expansions disagree at n={n}, k={k}"
            );
        }
    }
}

#[test]
fn closed_form_matches_brute_force_at_the_caps() {
    assert_eq!(z_power_expand(4, 3), brute_force_expand(4, 3));
    assert_eq!(z_power_expand(2, 4), brute_force_expand(2, 4));
    assert_eq!(z_power_expand(4, 4), brute_force_expand(4, 4));
}

#[test]
fn every_term_keeps_the_bookkeeping_invariants() {
    // One atom per factor of Z; the surviving derivation word is never
    // empty; at least one factor keeps a bare symbol; and the letters spent
    // on the word and on the atom words add up to k.
    for (n, k) in [(2, 3), (3, 3), (2, 4)] {
        let exp = z_power_expand(n, k);
        for (word, coeff) in exp.terms() {
            assert!(!word.is_empty());
            for (m, c) in coeff.terms() {
                assert!(c > 0);
                assert_eq!(m.atoms().len(), k as usize);
                let spent: usize =
                    word.len() + m.atoms().iter().map(|a| a.word().len()).sum::<usize>();
                assert_eq!(spent, k as usize);
                assert!(m.atoms().iter().any(|a| a.word().is_empty()));
            }
        }
    }
}

#[test]
fn factored_families_cover_every_level() {
    for n in 1..=3 {
        for k in 1..=3usize {
            let exp = z_power_expand(n, k as u32);
            let families = product_form_check(&exp).unwrap();
            let lens: BTreeSet<usize> = families.iter().map(|f| f.word_len()).collect();
            assert_eq!(lens, (1..=k).collect(), "n={n}, k={k}");
        }
    }
}

fn q(p: i64, d: i64) -> BigRational {
    BigRational::new(p.into(), d.into())
}

/// Apply a derivation word to a polynomial, rightmost letter first.
fn apply_word(fields: &[PolyVectorField], word: &[Letter], f: &Poly) -> Poly {
    let mut out = f.clone();
    for &j in word.iter().rev() {
        out = fields[j - 1].apply(&out);
    }
    out
}

/// Evaluate the normal form against concrete data: substitute polynomials
/// for the symbols and vector fields for the derivations.
fn evaluate_expansion(
    exp: &DerivationExpansion,
    fields: &[PolyVectorField],
    symbols: &[Poly],
    f: &Poly,
) -> Poly {
    let mut total = Poly::zero(f.nvars());
    for (word, coeff) in exp.terms() {
        let derived = apply_word(fields, word.letters(), f);
        for (m, c) in coeff.terms() {
            let mut scalar = Poly::constant(f.nvars(), BigRational::from_integer(c.into()));
            for atom in m.atoms() {
                scalar = scalar.mul(&apply_word(fields, atom.word(), &symbols[atom.base() - 1]));
            }
            total = total.add(&scalar.mul(&derived));
        }
    }
    total
}

#[test]
fn expansion_is_an_operator_identity_for_noncommuting_fields() {
    // Specialize the free derivations to the left-invariant fields on the
    // Heisenberg group (which genuinely fail to commute: [L₁, L₂] = L₃) and
    // the symbols to concrete polynomials.  Iterating Z = Σ z_j L_j
    // directly must give the same operator as the normal form.
    let alg = Arc::new(samples::heisenberg());
    let law = group_law(&alg);
    let fields = invariant_fields(&law, Side::Left);

    let v1 = Poly::var(3, 0);
    let v2 = Poly::var(3, 1);
    let v3 = Poly::var(3, 2);
    let symbols = vec![
        v2.mul(&v2).add(&v3.scale(&q(1, 2))),
        v1.sub(&v2.mul(&v3)),
        Poly::int(3, 1).add(&v1.mul(&v1)),
    ];
    let f = v1.mul(&v3).add(&v2.pow(3)).sub(&v1.scale(&q(5, 3)));

    let z_field = |g: &Poly| -> Poly {
        let mut out = Poly::zero(3);
        for (zj, lj) in symbols.iter().zip(&fields) {
            out = out.add(&zj.mul(&lj.apply(g)));
        }
        out
    };

    let mut direct = f.clone();
    for k in 1..=4u32 {
        direct = z_field(&direct);
        let via_normal_form = evaluate_expansion(&z_power_expand(3, k), &fields, &symbols, &f);
        assert_eq!(direct, via_normal_form, "operator identity fails at k={k}");
    }
}
