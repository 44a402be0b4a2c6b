//! Exhaustive duality and Leibniz checks through graded degree 6, and
//! empirical behaviour of group Taylor polynomials (remainder scaling, mean
//! value inequality).

use expr_dsl::{parse, Expr};
use graded_core::{fit_slope, scaling_exponent_probe, MultiIndex};
use nilpotent_group::{
    apply_field_word, dual_monomial_basis, fs_taylor_expr, group_law, invariant_fields,
    leibniz_coefficients, rational_to_f64, samples, GroupLaw, Poly, Side,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const DEGREE_CAP: u32 = 6;

fn check_duality(law: &GroupLaw) {
    let g = law.algebra().graded();
    let fields = invariant_fields(law, Side::Left);
    let qs = dual_monomial_basis(law, DEGREE_CAP);
    let indices = g.indices_up_to(DEGREE_CAP);
    assert_eq!(qs.len(), indices.len());

    for (alpha, q_alpha) in &qs {
        assert_eq!(
            q_alpha.homogeneous_degree(g.weights()),
            Some(u64::from(alpha.degree(g))),
            "q_{alpha:?} is not homogeneous"
        );
        for beta in &indices {
            let val = apply_field_word(&fields, beta, q_alpha).constant_term();
            let expected = if alpha == beta {
                BigRational::one()
            } else {
                BigRational::zero()
            };
            assert_eq!(val, expected, "(L^{beta:?} q_{alpha:?})(0)");
        }
    }
}

#[test]
fn duality_pairing_heisenberg_through_degree_6() {
    check_duality(&group_law(&Arc::new(samples::heisenberg())));
}

#[test]
fn duality_pairing_engel_through_degree_6() {
    check_duality(&group_law(&Arc::new(samples::engel())));
}

#[test]
fn leibniz_boundary_and_degree_split_engel() {
    let alg = Arc::new(samples::engel());
    let law = group_law(&alg);
    let g = alg.graded();
    let zero = MultiIndex::zero(4);
    for alpha in g.indices_up_to(DEGREE_CAP) {
        let coeffs = leibniz_coefficients(&law, &alpha);
        assert_eq!(coeffs.get(&(alpha.clone(), zero.clone())), Some(&BigRational::one()));
        assert_eq!(coeffs.get(&(zero.clone(), alpha.clone())), Some(&BigRational::one()));
        for ((a1, a2), c) in &coeffs {
            assert!(!c.is_zero());
            assert_eq!(
                a1.degree(g) + a2.degree(g),
                alpha.degree(g),
                "split {a1:?},{a2:?} of {alpha:?}"
            );
            // setting w = 0 (resp. v = 0) must collapse the sum to v^α
            if *a2 == zero {
                assert_eq!(a1, &alpha);
            }
            if *a1 == zero {
                assert_eq!(a2, &alpha);
            }
        }
    }
}

fn binomial(n: u32, k: u32) -> BigRational {
    if k > n {
        return BigRational::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    BigRational::new(num, den)
}

/// On the abelian group the expansion of (v + w)^α is plain multinomial.
#[test]
fn leibniz_on_abelian_group_is_binomial() {
    let alg = Arc::new(samples::abelian(3));
    let law = group_law(&alg);
    let g = alg.graded();
    for alpha in g.indices_up_to(4) {
        let coeffs = leibniz_coefficients(&law, &alpha);
        for ((a1, a2), c) in &coeffs {
            let expected: BigRational = (0..3)
                .map(|i| binomial(alpha.entry(i), a1.entry(i)))
                .product();
            assert_eq!(c, &expected);
            assert_eq!(a1.add(a2), alpha);
        }
        // every valid split appears
        let expected_count: u32 = (0..3).map(|i| alpha.entry(i) + 1).product();
        assert_eq!(coeffs.len(), expected_count as usize);
    }
}

/// For f = sin(v3) on the Heisenberg group the degree-3 Taylor polynomial is
/// exactly v3: the invariant derivative (L₁L₂f)(0) = 1/2 contributes
/// (1/2)·v1v2, cancelling the −(1/2)v1v2 inside q_{(0,0,1)}. The remainder
/// sin(v3) − v3 then scales like ε⁶ (its leading term −v3³/6 has graded
/// degree 6), comfortably beating the guaranteed ε⁴.
#[test]
fn taylor_of_sine_collapses_to_graded_projection() {
    let alg = Arc::new(samples::heisenberg());
    let law = group_law(&alg);
    let f = parse("sin(x3)").unwrap();

    let p3 = fs_taylor_expr(&law, &f, 3).unwrap();
    assert_eq!(p3, Poly::var(3, 2));
    let p2 = fs_taylor_expr(&law, &f, 2).unwrap();
    assert_eq!(p2, p3);

    let g = alg.graded();
    let remainder = |v: &[f64]| v[2].sin() - v[2];
    let eps: Vec<f64> = (2..=7).map(|k| 0.5f64.powi(k)).collect();
    let probe = scaling_exponent_probe(&remainder, g, &[0.4, -0.3, 0.8], &eps).unwrap();
    assert!(
        (probe.exponent - 6.0).abs() < 0.3,
        "remainder slope {} should sit near 6",
        probe.exponent
    );
    assert!(probe.exponent >= 4.0 - 0.15);
}

/// Taylor remainder slope for a mixed smooth function at several orders. The
/// slope must be at least N+1; it can exceed it when the first omitted
/// graded-Taylor term vanishes.
#[test]
fn taylor_remainder_scaling_for_mixed_function() {
    let alg = Arc::new(samples::heisenberg());
    let law = group_law(&alg);
    let g = alg.graded();
    let f = parse("sin(x3) + x1^2 + x2^3").unwrap();

    for n_max in [1u32, 2, 3] {
        let p = fs_taylor_expr(&law, &f, n_max).unwrap();
        let remainder = |v: &[f64]| {
            let fv = f.eval(v).unwrap();
            let pv: f64 = p
                .terms()
                .map(|(idx, c)| rational_to_f64(c) * idx.eval_f64(v))
                .sum();
            fv - pv
        };
        let eps: Vec<f64> = (2..=7).map(|k| 0.5f64.powi(k)).collect();
        let probe = scaling_exponent_probe(&remainder, g, &[0.7, 0.4, -0.6], &eps).unwrap();
        assert!(
            probe.exponent >= f64::from(n_max) + 1.0 - 0.15,
            "order {n_max}: slope {} below guaranteed {}",
            probe.exponent,
            n_max + 1
        );
    }
}

/// Empirical stratified mean value inequality
/// |f(y) − f(0)| ≤ C Σ_j |y|^{υ_j} sup_{|z| ≤ η|y|} |(L_j f)(z)| with η = 2.
/// The observed constant should be modest; we record how it moves with η to
/// document that η = 2 is not sharp-edged.
#[test]
fn mean_value_inequality_empirical() {
    let alg = Arc::new(samples::heisenberg());
    let law = group_law(&alg);
    let g = alg.graded();
    let fields = invariant_fields(&law, Side::Left);
    let f = parse("sin(x3) + x1^2").unwrap();
    let f0 = f.eval(&[0.0; 3]).unwrap();

    // L_j f as expressions via the polynomial field coefficients
    let lf: Vec<Expr> = fields
        .iter()
        .map(|field| {
            let mut out = Expr::num_int(0);
            for (i, a) in field.coeffs().iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let term = Expr::Mul(Box::new(a.to_expr()), Box::new(f.diff(i + 1)));
                out = Expr::Add(Box::new(out), Box::new(term));
            }
            out.simplify()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let sample_ball = |rng: &mut ChaCha8Rng, radius: f64| -> Vec<f64> {
        // the ball {|z| ≤ ρ} sits inside the box |z_i| ≤ ρ^{υ_i}
        loop {
            let z: Vec<f64> = (0..3)
                .map(|i| {
                    let b = radius.powi(g.weight(i) as i32);
                    rng.gen_range(-b..=b)
                })
                .collect();
            if g.quasinorm(&z).unwrap() <= radius {
                return z;
            }
        }
    };

    let mut constant_for = |eta: f64| -> f64 {
        let mut rng_local = ChaCha8Rng::seed_from_u64(7);
        let mut worst = 0.0f64;
        for _ in 0..300 {
            let y: Vec<f64> = (0..3).map(|_| rng_local.gen_range(-1.0..1.0)).collect();
            let norm_y = g.quasinorm(&y).unwrap();
            if norm_y < 1e-3 {
                continue;
            }
            let mut bound = 0.0;
            for (j, lfj) in lf.iter().enumerate() {
                let mut sup = 0.0f64;
                for _ in 0..200 {
                    let z = sample_ball(&mut rng, eta * norm_y);
                    sup = sup.max(lfj.eval(&z).unwrap().abs());
                }
                bound += norm_y.powi(g.weight(j) as i32) * sup;
            }
            let ratio = (f.eval(&y).unwrap() - f0).abs() / bound;
            if ratio > worst {
                worst = ratio;
            }
        }
        worst
    };

    let c2 = constant_for(2.0);
    assert!(c2.is_finite() && c2 < 10.0, "C(η=2) = {c2}");
    // enlarging the ball can only shrink the constant; η = 1 still works here
    let c1 = constant_for(1.0);
    let c3 = constant_for(3.0);
    assert!(c3 <= c1 * 1.05, "C should not grow with η: {c1} vs {c3}");
    assert!(c1.is_finite() && c1 < 10.0, "C(η=1) = {c1}");
}

/// fit_slope agrees with a hand-computed regression on exact powers.
#[test]
fn slope_fit_recovers_exact_exponent() {
    let xs: Vec<f64> = (1..=6).map(|k| (0.5f64.powi(k)).ln()).collect();
    let ys: Vec<f64> = (1..=6).map(|k| (0.5f64.powi(3 * k)).ln()).collect();
    assert!((fit_slope(&xs, &ys) - 3.0).abs() < 1e-12);
}
