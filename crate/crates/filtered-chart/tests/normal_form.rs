//! Normal ordering of frame-word operators, checked two independent ways:
//! against direct application to random test functions (the operator and its
//! normal form must act identically), and against pure enveloping-algebra
//! rewriting when the frame has constant structure functions.

use expr_dsl::Expr;
use filtered_chart::{frame_validate, normal_order, op_parse, Chart, Frame, FrameCertificate, OpExpr};
use graded_core::{GradedStructure, MultiIndex};
use nilpotent_group::{group_law, invariant_fields, samples, Poly, Side};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn heisenberg_chart() -> Chart {
    let half = Expr::num_rat(1, 2);
    let rows = vec![
        vec![
            Expr::num_int(1),
            Expr::num_int(0),
            Expr::Neg(Box::new(Expr::Mul(Box::new(half.clone()), Box::new(Expr::x(2))))),
        ],
        vec![
            Expr::num_int(0),
            Expr::num_int(1),
            Expr::Mul(Box::new(half), Box::new(Expr::x(1))),
        ],
        vec![Expr::num_int(0), Expr::num_int(0), Expr::num_int(1)],
    ];
    let g = GradedStructure::new(&[1, 1, 2]).unwrap();
    let mut chart = Chart::new(g, vec![(-1.0, 1.0); 3]).unwrap();
    chart.add_frame("heis", Frame::new(rows)).unwrap();
    chart
}

fn validated(chart: &Chart, name: &str) -> FrameCertificate {
    frame_validate(chart, name).unwrap()
}

/// Random polynomial in `n` variables, total degree ≤ `deg`, small rational
/// coefficients.
fn random_poly_expr(rng: &mut ChaCha8Rng, n: usize, deg: u32) -> Expr {
    let mut acc = Expr::num_int(0);
    for _ in 0..rng.gen_range(2..=4) {
        let mut term = Expr::Num(BigRational::new(
            rng.gen_range(-6i64..=6).into(),
            rng.gen_range(1i64..=3).into(),
        ));
        let mut budget = deg;
        for j in 1..=n {
            let e = rng.gen_range(0..=budget.min(2));
            budget -= e;
            for _ in 0..e {
                term = Expr::Mul(Box::new(term), Box::new(Expr::x(j)));
            }
        }
        acc = Expr::Add(Box::new(acc), Box::new(term));
    }
    acc.simplify()
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect()
}

/// `P` and its normal form must act identically on test functions.
fn assert_same_action(
    chart: &Chart,
    cert: &FrameCertificate,
    p: &OpExpr,
    rng: &mut ChaCha8Rng,
    funcs: usize,
    tol: f64,
) {
    let n = chart.graded().dim();
    let nf = normal_order(chart, cert, p).unwrap();
    for _ in 0..funcs {
        let f = random_poly_expr(rng, n, 3);
        let lhs = p.apply(cert.frame(), &f);
        let rhs = nf.apply(cert.frame(), &f);
        for _ in 0..3 {
            let x = random_point(rng, n);
            let a = lhs.eval(&x).unwrap();
            let b = rhs.eval(&x).unwrap();
            assert!(
                (a - b).abs() <= tol * a.abs().max(1.0),
                "action mismatch {a} vs {b} at {x:?} for {nf}"
            );
        }
    }
}

fn idx(e: &[u32]) -> MultiIndex {
    MultiIndex::new(e.to_vec())
}

#[test]
fn swapping_one_pair_produces_the_bracket_correction() {
    let chart = heisenberg_chart();
    let cert = validated(&chart, "heis");
    let nf = normal_order(&chart, &cert, &OpExpr::word(&[2, 1])).unwrap();
    assert_eq!(nf.terms().len(), 2);
    assert!(nf.coefficient(&idx(&[1, 1, 0])).is_one());
    let c3 = nf.coefficient(&idx(&[0, 0, 1]));
    assert_eq!(c3.eval(&[0.0; 3]).unwrap(), -1.0);
}

#[test]
fn scalar_coefficients_ride_in_front_of_the_monomial() {
    let chart = heisenberg_chart();
    let cert = validated(&chart, "heis");
    let f = Expr::Mul(Box::new(Expr::x(1)), Box::new(Expr::x(3)));
    let p = OpExpr::field(1).scale(&f);
    let nf = normal_order(&chart, &cert, &p).unwrap();
    assert_eq!(nf.terms().len(), 1);
    let c = nf.coefficient(&idx(&[1, 0, 0]));
    assert!((c.eval(&[0.5, 0.0, 0.25]).unwrap() - 0.125).abs() < 1e-15);
}

#[test]
fn three_letter_word_normalizes_with_one_bracket_term() {
    let chart = heisenberg_chart();
    let cert = validated(&chart, "heis");
    let nf = normal_order(&chart, &cert, &OpExpr::word(&[1, 2, 1])).unwrap();
    // X1X2X1 = X1·(X1X2 − X3) = X1²X2 − X1X3 (X3 is central here).
    assert_eq!(nf.terms().len(), 2);
    assert!(nf.coefficient(&idx(&[2, 1, 0])).is_one());
    assert_eq!(nf.coefficient(&idx(&[1, 0, 1])).eval(&[0.0; 3]).unwrap(), -1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    assert_same_action(&chart, &cert, &OpExpr::word(&[1, 2, 1]), &mut rng, 20, 1e-8);
}

#[test]
fn parsed_operators_agree_with_their_normal_forms_pointwise() {
    let chart = heisenberg_chart();
    let cert = validated(&chart, "heis");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for src in [
        "X2*X1*X2 - x1*X3 + 2*X1",
        "(X1 + x2*X2)^2",
        "sin(x1)*X3*X1",
        "X3*X2*X1 + (1/3)*X2",
        "(1 + x1^2)*X1*X1 - X2*X3*X2",
    ] {
        let p = op_parse(src).unwrap();
        assert_same_action(&chart, &cert, &p, &mut rng, 6, 1e-8);
    }
}

#[test]
fn random_words_with_polynomial_coefficients_normalize_correctly() {
    let mut charts = vec![heisenberg_chart()];
    // A variable-coefficient variant: X3 = (1+x1²)∂3 bends the structure
    // functions without breaking adaptedness.
    let g = GradedStructure::new(&[1, 1, 2]).unwrap();
    let mut chart = Chart::new(g, vec![(-1.0, 1.0); 3]).unwrap();
    let half = Expr::num_rat(1, 2);
    let rows = vec![
        vec![
            Expr::num_int(1),
            Expr::num_int(0),
            Expr::Neg(Box::new(Expr::Mul(Box::new(half.clone()), Box::new(Expr::x(2))))),
        ],
        vec![
            Expr::num_int(0),
            Expr::num_int(1),
            Expr::Mul(Box::new(half), Box::new(Expr::x(1))),
        ],
        vec![
            Expr::num_int(0),
            Expr::num_int(0),
            Expr::Add(Box::new(Expr::num_int(1)), Box::new(Expr::Pow(Box::new(Expr::x(1)), 2))),
        ],
    ];
    chart.add_frame("heis", Frame::new(rows)).unwrap();
    charts.push(chart);

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for chart in &charts {
        let cert = validated(chart, "heis");
        for _ in 0..10 {
            let len = rng.gen_range(1..=4);
            let word: Vec<usize> = (0..len).map(|_| rng.gen_range(1..=3)).collect();
            let mut p = OpExpr::word(&word);
            if rng.gen_bool(0.5) {
                p = p.scale(&random_poly_expr(&mut rng, 3, 2));
            }
            if rng.gen_bool(0.4) {
                let len2 = rng.gen_range(1..=3);
                let word2: Vec<usize> = (0..len2).map(|_| rng.gen_range(1..=3)).collect();
                p = p.add(&OpExpr::word(&word2).neg());
            }
            assert_same_action(chart, &cert, &p, &mut rng, 4, 1e-8);
        }
    }
}

/// On a chart framed by left-invariant fields the structure functions are the
/// (constant) algebra brackets, so chart-level normal ordering must coincide
/// with abstract Poincaré–Birkhoff–Witt rewriting, coefficient by
/// coefficient.
#[test]
fn invariant_frames_reduce_to_enveloping_algebra_rewriting() {
    for alg in [samples::heisenberg(), samples::engel()] {
        let alg = Arc::new(alg);
        let n = alg.dim();
        let law = group_law(&alg);
        let fields = invariant_fields(&law, Side::Left);
        let rows: Vec<Vec<Expr>> = fields
            .iter()
            .map(|f| f.coeffs().iter().map(Poly::to_expr).collect())
            .collect();
        let mut chart = Chart::new(alg.graded().clone(), vec![(-1.0, 1.0); n]).unwrap();
        chart.set_samples_per_axis(3);
        chart.add_frame("inv", Frame::new(rows)).unwrap();
        let cert = validated(&chart, "inv");

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let origin = vec![0.0; n];
        for _ in 0..15 {
            let len = rng.gen_range(2..=5);
            let word: Vec<usize> = (0..len).map(|_| rng.gen_range(1..=n)).collect();
            let nf = normal_order(&chart, &cert, &OpExpr::word(&word)).unwrap();
            let abstract_nf = uea::pbw_normalize(&alg, &word).unwrap();
            let mut seen = 0;
            for (alpha, c) in abstract_nf.terms() {
                let got = nf.coefficient(alpha);
                let want = nilpotent_group::rational_to_f64(c);
                let via_eval = got.eval(&origin).unwrap();
                assert!(
                    (via_eval - want).abs() < 1e-12,
                    "word {word:?}, α={alpha:?}: chart gives {via_eval}, algebra {want}"
                );
                seen += 1;
            }
            assert_eq!(seen, nf.terms().len(), "word {word:?}: extra chart terms");
        }
    }
}

#[test]
fn zero_and_identity_words_are_fixed_points() {
    let chart = heisenberg_chart();
    let cert = validated(&chart, "heis");
    let nf = normal_order(&chart, &cert, &OpExpr::zero()).unwrap();
    assert!(nf.terms().is_empty());
    let nf = normal_order(&chart, &cert, &OpExpr::identity()).unwrap();
    assert_eq!(nf.terms().len(), 1);
    assert!(nf.coefficient(&idx(&[0, 0, 0])).is_one());
    assert!(nf.coefficient(&idx(&[1, 0, 0])).is_zero());
}
