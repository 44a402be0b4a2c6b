//! Pointwise frame transitions and principal-symbol invariance.
//!
//! Two frames on the same chart are related at each point by the matrix
//! solving `X_i = Σ_k T_{ki} Y_k`.  When both frames are adapted to the
//! same filtration, `T` is block-upper-triangular in the weight strata
//! (`T_{ki} = 0` for `υ_k > υ_i`); its block-diagonal part is what acts on
//! the osculating generators, `⟨X_i⟩ = Σ_{υ_k=υ_i} T_{ki} ⟨Y_k⟩`, and the
//! principal symbol is invariant under that substitution.

use std::collections::BTreeMap;
use std::sync::Arc;

use graded_core::MultiIndex;
use nilpotent_group::LieAlgebra;
use num_rational::BigRational;
use num_traits::Zero;
use uea::{uea_multiply, UEAElement};

use crate::chart::{det_f64, solve_f64, solve_rational, transpose};
use crate::diffop::{normal_order, principal_symbol, reexpress, OpExpr};
use crate::osculate::{osculating_algebra, rational_to_f64};
use crate::{Chart, ChartError, FrameCertificate};

/// Tolerance below which an off-stratum transition entry counts as zero on
/// the floating-point path (the rational path tests exactly).
const SHAPE_TOL: f64 = 1e-10;

/// The transition between two frames at a point: `X_i = Σ_k T_{ki} Y_k`.
#[derive(Debug, Clone)]
pub struct Transition {
    x: Vec<f64>,
    weights: Vec<u32>,
    t: Vec<Vec<f64>>,
    t_exact: Option<Vec<Vec<BigRational>>>,
}

impl Transition {
    pub fn point(&self) -> &[f64] {
        &self.x
    }

    /// `T` with row index `k` (the Y frame) and column index `i` (the X
    /// frame).
    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.t
    }

    /// `T_{ki}`, 1-based.
    pub fn entry(&self, k: usize, i: usize) -> f64 {
        self.t[k - 1][i - 1]
    }

    /// Exact transition matrix when both frames evaluated rationally.
    pub fn exact(&self) -> Option<&Vec<Vec<BigRational>>> {
        self.t_exact.as_ref()
    }

    /// Block-diagonal part: entries with `υ_k = υ_i`, everything else zero.
    pub fn diag(&self) -> Vec<Vec<f64>> {
        let n = self.weights.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        if self.weights[k] == self.weights[i] {
                            self.t[k][i]
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Block-diagonal part as exact rationals (exact path if available,
    /// otherwise the float entries' binary expansions).
    pub fn diag_rational(&self) -> Vec<Vec<BigRational>> {
        let n = self.weights.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        if self.weights[k] != self.weights[i] {
                            return BigRational::zero();
                        }
                        match &self.t_exact {
                            Some(te) => te[k][i].clone(),
                            None => BigRational::from_float(self.t[k][i])
                                .unwrap_or_else(BigRational::zero),
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Coefficients `tildeT_{α,β}` of `(diag(T)v)^α = Σ_{[β]=[α]}
    /// tildeT_{α,β} v^β`.
    pub fn tilde(&self, alpha: &MultiIndex) -> Vec<(MultiIndex, f64)> {
        let n = self.weights.len();
        let diag = self.diag();
        // Running polynomial in v as a sparse exponent → coefficient map.
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        acc.insert(MultiIndex::zero(n), 1.0);
        for k in 0..n {
            for _ in 0..alpha.entry(k) {
                let mut next: BTreeMap<MultiIndex, f64> = BTreeMap::new();
                for (beta, c) in &acc {
                    for i in 0..n {
                        let d = diag[k][i];
                        if d == 0.0 {
                            continue;
                        }
                        let gamma = beta.add(&MultiIndex::unit(n, i));
                        *next.entry(gamma).or_insert(0.0) += c * d;
                    }
                }
                acc = next;
            }
        }
        acc.into_iter().filter(|(_, c)| *c != 0.0).collect()
    }
}

/// Solve the transition `X_i = Σ_k T_{ki} Y_k` at `x` and certify its
/// block-upper-triangular shape.
pub fn transition(
    chart: &Chart,
    cert_x: &FrameCertificate,
    cert_y: &FrameCertificate,
    x: &[f64],
) -> Result<Transition, ChartError> {
    chart.check_point(x)?;
    let n = chart.dim();
    let weights = chart.graded().weights().to_vec();

    let a = cert_x.frame().matrix_at(x)?;
    let b = cert_y.frame().matrix_at(x)?;
    let bt = transpose(&b);

    // Exact path first: both coefficient matrices at a binary-rational
    // point, solved over ℚ.
    let xr: Option<Vec<BigRational>> = x.iter().map(|&t| BigRational::from_float(t)).collect();
    let t_exact = xr.and_then(|xr| {
        let ar = cert_x.frame().matrix_at_rational(&xr)?;
        let br = cert_y.frame().matrix_at_rational(&xr)?;
        let btr: Vec<Vec<BigRational>> = (0..n)
            .map(|m| (0..n).map(|k| br[k][m].clone()).collect())
            .collect();
        let mut te = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            let rhs: Vec<BigRational> = (0..n).map(|m| ar[i][m].clone()).collect();
            let col = solve_rational(btr.clone(), rhs)?;
            for k in 0..n {
                te[k][i] = col[k].clone();
            }
        }
        Some(te)
    });

    let mut t = vec![vec![0.0; n]; n];
    match &t_exact {
        Some(te) => {
            for k in 0..n {
                for i in 0..n {
                    t[k][i] = rational_to_f64(&te[k][i]);
                }
            }
        }
        None => {
            for i in 0..n {
                let rhs: Vec<f64> = a[i].clone();
                let col =
                    solve_f64(bt.clone(), rhs).ok_or_else(|| ChartError::Degenerate {
                        x: x.to_vec(),
                        det: det_f64(bt.clone()),
                    })?;
                for k in 0..n {
                    t[k][i] = col[k];
                }
            }
        }
    }

    for k in 0..n {
        for i in 0..n {
            if weights[k] <= weights[i] {
                continue;
            }
            let bad = match &t_exact {
                Some(te) => !te[k][i].is_zero(),
                None => t[k][i].abs() > SHAPE_TOL,
            };
            if bad {
                return Err(ChartError::TransitionShape {
                    x: x.to_vec(),
                    row: k + 1,
                    col: i + 1,
                    value: t[k][i],
                    wrow: weights[k],
                    wcol: weights[i],
                });
            }
        }
    }

    Ok(Transition {
        x: x.to_vec(),
        weights,
        t,
        t_exact,
    })
}

/// Result of comparing principal symbols across a frame change at a set of
/// sample points.
#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

impl InvarianceReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual.is_finite() && self.max_residual <= tol
    }
}

/// Substitute `⟨X_i⟩ = Σ_{υ_k=υ_i} D_{ki} ⟨Y_k⟩` into an enveloping-algebra
/// element over the X-frame osculating algebra, producing one over the
/// Y-frame algebra.
fn substitute_generators(
    sym_x: &UEAElement,
    alg_y: &Arc<LieAlgebra>,
    diag: &[Vec<BigRational>],
) -> UEAElement {
    let n = alg_y.dim();
    let gens: Vec<UEAElement> = (0..n)
        .map(|i| {
            let mut gen = UEAElement::zero(alg_y);
            for (k, row) in diag.iter().enumerate() {
                if row[i].is_zero() {
                    continue;
                }
                let yk = UEAElement::generator(alg_y, k + 1)
                    .expect("generator index in range")
                    .scale(&row[i]);
                gen = gen.add(&yk).expect("same algebra");
            }
            gen
        })
        .collect();
    let mut out = UEAElement::zero(alg_y);
    for (alpha, c) in sym_x.terms() {
        let mut term = UEAElement::one(alg_y).scale(c);
        for (i, &power) in alpha.entries().iter().enumerate() {
            for _ in 0..power {
                term = uea_multiply(&term, &gens[i]).expect("same algebra");
            }
        }
        out = out.add(&term).expect("same algebra");
    }
    out
}

/// Check that the degree-`N` principal symbol of `p` transforms correctly
/// under a frame change: normal-order `p` in both frames, push the X-frame
/// symbol through `⟨X⟩ = diag(T)ᵗ⟨Y⟩`, and compare coefficients in the
/// enveloping algebra of the Y-frame osculating algebra at each sample.
pub fn frame_invariance_check(
    chart: &Chart,
    cert_x: &FrameCertificate,
    cert_y: &FrameCertificate,
    p: &OpExpr,
    n_deg: u32,
    samples: &[Vec<f64>],
) -> Result<InvarianceReport, ChartError> {
    let nf_x = normal_order(chart, cert_x, p)?;
    let p_in_y = reexpress(chart, cert_x, cert_y, p)?;
    let nf_y = normal_order(chart, cert_y, &p_in_y)?;

    let mut residuals = Vec::with_capacity(samples.len());
    for x in samples {
        let sym_x = principal_symbol(chart, cert_x, &nf_x, n_deg, x)?;
        let sym_y = principal_symbol(chart, cert_y, &nf_y, n_deg, x)?;
        let trans = transition(chart, cert_x, cert_y, x)?;
        let alg_y = osculating_algebra(chart, cert_y, x)?;
        let mapped = substitute_generators(&sym_x, &alg_y, &trans.diag_rational());
        let diff = mapped.sub(&sym_y).expect("same algebra");
        let residual = diff
            .terms()
            .map(|(_, c)| rational_to_f64(c).abs())
            .fold(0.0_f64, f64::max);
        residuals.push(residual);
    }
    let max_residual = residuals.iter().copied().fold(0.0_f64, f64::max);
    Ok(InvarianceReport {
        residuals,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{frame_validate, Frame};
    use expr_dsl::Expr;
    use graded_core::GradedStructure;

    fn heisenberg_rows() -> Vec<Vec<Expr>> {
        let half = Expr::num_rat(1, 2);
        vec![
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
        ]
    }

    fn chart_with_frames() -> Chart {
        let g = GradedStructure::new(&[1, 1, 2]).unwrap();
        let mut chart = Chart::new(g, vec![(-1.0, 1.0); 3]).unwrap();
        let rows = heisenberg_rows();
        chart.add_frame("heis", Frame::new(rows.clone())).unwrap();

        // Y = (X1, X2, X3 + X1).
        let mut shear = rows.clone();
        shear[2] = (0..3)
            .map(|k| {
                Expr::Add(Box::new(rows[2][k].clone()), Box::new(rows[0][k].clone())).simplify()
            })
            .collect();
        chart.add_frame("shear", Frame::new(shear)).unwrap();

        // Y = 2X.
        let double = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| Expr::Mul(Box::new(Expr::num_int(2)), Box::new(e.clone())).simplify())
                    .collect()
            })
            .collect();
        chart.add_frame("double", Frame::new(double)).unwrap();

        // Y1 = X1 + X3 mixes a weight-2 field into a weight-1 slot.
        let mut tilt = rows.clone();
        tilt[0] = (0..3)
            .map(|k| {
                Expr::Add(Box::new(rows[0][k].clone()), Box::new(rows[2][k].clone())).simplify()
            })
            .collect();
        chart.add_frame("tilt", Frame::new(tilt)).unwrap();
        chart
    }

    #[test]
    fn identity_transition_is_exactly_the_identity() {
        let chart = chart_with_frames();
        let cert = frame_validate(&chart, "heis").unwrap();
        let tr = transition(&chart, &cert, &cert, &[0.3, -0.2, 0.7]).unwrap();
        for k in 1..=3 {
            for i in 1..=3 {
                let want = if k == i { 1.0 } else { 0.0 };
                assert_eq!(tr.entry(k, i), want);
            }
        }
        let alpha = MultiIndex::new(vec![2, 1, 0]);
        let tilde = tr.tilde(&alpha);
        assert_eq!(tilde, vec![(alpha, 1.0)]);
    }

    #[test]
    fn shear_in_the_top_stratum_stays_block_upper_triangular() {
        let chart = chart_with_frames();
        let cert_x = frame_validate(&chart, "heis").unwrap();
        let cert_y = frame_validate(&chart, "shear").unwrap();
        let tr = transition(&chart, &cert_x, &cert_y, &[0.5, 0.25, -0.5]).unwrap();
        // X3 = Y3 − Y1: weight-1 entry under a weight-2 column is allowed.
        assert_eq!(tr.entry(3, 3), 1.0);
        assert_eq!(tr.entry(1, 3), -1.0);
        let diag = tr.diag();
        for k in 0..3 {
            for i in 0..3 {
                let want = if k == i { 1.0 } else { 0.0 };
                assert_eq!(diag[k][i], want, "diag[{k}][{i}]");
            }
        }
    }

    #[test]
    fn doubled_frame_scales_the_transition_by_a_half() {
        let chart = chart_with_frames();
        let cert_x = frame_validate(&chart, "heis").unwrap();
        let cert_y = frame_validate(&chart, "double").unwrap();
        let tr = transition(&chart, &cert_x, &cert_y, &[0.1, 0.9, 0.0]).unwrap();
        for k in 1..=3 {
            for i in 1..=3 {
                let want = if k == i { 0.5 } else { 0.0 };
                assert!((tr.entry(k, i) - want).abs() < 1e-15);
            }
        }
        // (diag(T)v)^α picks up 2^{−|α|} on the diagonal.
        let alpha = MultiIndex::new(vec![1, 1, 0]);
        let tilde = tr.tilde(&alpha);
        assert_eq!(tilde.len(), 1);
        assert_eq!(tilde[0].0, alpha);
        assert!((tilde[0].1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mixing_strata_downward_is_a_shape_violation() {
        let chart = chart_with_frames();
        let cert_x = frame_validate(&chart, "heis").unwrap();
        let cert_y = frame_validate(&chart, "tilt").unwrap();
        match transition(&chart, &cert_x, &cert_y, &[0.0, 0.0, 0.0]) {
            Err(ChartError::TransitionShape { row: 3, col: 1, wrow: 2, wcol: 1, .. }) => {}
            other => panic!("expected TransitionShape, got {other:?}"),
        }
    }

    #[test]
    fn cocycle_composes_through_an_intermediate_frame() {
        let chart = chart_with_frames();
        let x = [0.4, -0.6, 0.2];
        let cx = frame_validate(&chart, "heis").unwrap();
        let cy = frame_validate(&chart, "double").unwrap();
        let cz = frame_validate(&chart, "shear").unwrap();
        let t_yx = transition(&chart, &cx, &cy, &x).unwrap();
        let t_zy = transition(&chart, &cy, &cz, &x).unwrap();
        let t_zx = transition(&chart, &cx, &cz, &x).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                let mut acc = 0.0;
                for m in 0..3 {
                    acc += t_zy.matrix()[k][m] * t_yx.matrix()[m][i];
                }
                assert!(
                    (acc - t_zx.matrix()[k][i]).abs() < 1e-12,
                    "entry ({k},{i}): {acc} vs {}",
                    t_zx.matrix()[k][i]
                );
            }
        }
    }

    #[test]
    fn principal_symbol_is_invariant_under_doubling() {
        let chart = chart_with_frames();
        let cert_x = frame_validate(&chart, "heis").unwrap();
        let cert_y = frame_validate(&chart, "double").unwrap();
        let p = crate::op_parse("X1^2").unwrap();
        let samples: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0, 0.0],
            vec![0.25, -0.5, 0.75],
            vec![-0.125, 0.375, -0.625],
        ];
        let report =
            frame_invariance_check(&chart, &cert_x, &cert_y, &p, 2, &samples).unwrap();
        assert!(report.passes(1e-12), "residuals {:?}", report.residuals);
    }

    #[test]
    fn identity_frame_change_is_exact() {
        let chart = chart_with_frames();
        let cert = frame_validate(&chart, "heis").unwrap();
        let p = crate::op_parse("-X1^2 - X2^2").unwrap();
        let report = frame_invariance_check(
            &chart,
            &cert,
            &cert,
            &p,
            2,
            &[vec![0.5, 0.5, 0.5]],
        )
        .unwrap();
        assert_eq!(report.max_residual, 0.0);
    }
}
