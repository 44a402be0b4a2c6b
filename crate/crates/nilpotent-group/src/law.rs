//! Polynomial group law from the truncated BCH series, and the left/right
//! invariant vector fields it induces.

use crate::bch::{bch_generic, PolyVecOps};
use crate::poly::Poly;
use crate::{LieAlgebra, LieAlgebraError};
use num_rational::BigRational;
use std::sync::Arc;

/// The group multiplication `z(v, w) = log(exp v · exp w)` in exponential
/// coordinates, as `n` polynomials in the `2n` variables `v_1..v_n,
/// w_1..w_n`. Each `z_k` is `υ_k`-homogeneous for the doubled weight vector,
/// `z(v,0) = v`, `z(0,w) = w`, and `z(v,−v) = 0`; these identities are
/// enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLaw {
    alg: Arc<LieAlgebra>,
    z: Vec<Poly>,
}

/// Build the group law by evaluating the BCH series on symbolic generators,
/// truncated at the algebra's nilpotency step (where it is exact).
pub fn group_law(alg: &Arc<LieAlgebra>) -> GroupLaw {
    let n = alg.dim();
    let ops = PolyVecOps {
        alg,
        nvars: 2 * n,
    };
    let v: Vec<Poly> = (0..n).map(|i| Poly::var(2 * n, i)).collect();
    let w: Vec<Poly> = (0..n).map(|i| Poly::var(2 * n, n + i)).collect();
    let step = alg.step();
    let z = bch_generic(&ops, &v, &w, step, step);

    let law = GroupLaw {
        alg: Arc::clone(alg),
        z,
    };
    law.assert_structure();
    law
}

impl GroupLaw {
    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.alg
    }

    pub fn dim(&self) -> usize {
        self.alg.dim()
    }

    /// The component polynomials `z_1, …, z_n` in variables
    /// `(v_1..v_n, w_1..w_n)`.
    pub fn z(&self) -> &[Poly] {
        &self.z
    }

    /// Doubled weight vector (υ, υ) matching the `2n` law variables.
    pub fn doubled_weights(&self) -> Vec<u32> {
        let w = self.alg.graded().weights();
        w.iter().chain(w.iter()).copied().collect()
    }

    /// Render `z_k` with `v`/`w` variable names (for reports and tests).
    pub fn render_component(&self, k: usize) -> String {
        let n = self.dim();
        self.z[k].render(&|i| {
            if i < n {
                format!("v{}", i + 1)
            } else {
                format!("w{}", i - n + 1)
            }
        })
    }

    fn assert_structure(&self) {
        let n = self.dim();
        let weights2 = self.doubled_weights();
        let vars: Vec<usize> = (0..n).collect();
        let wars: Vec<usize> = (n..2 * n).collect();
        for (k, zk) in self.z.iter().enumerate() {
            let wk = self.alg.graded().weight(k) as u64;
            assert_eq!(
                zk.homogeneous_degree(&weights2),
                Some(wk),
                "z_{} is not υ_{}-homogeneous",
                k + 1,
                k + 1
            );
            // z(v, 0) = v and z(0, w) = w
            assert_eq!(zk.project_zero(&vars), Poly::var(n, k));
            assert_eq!(zk.project_zero(&wars), Poly::var(n, k));
        }
        // z(v, −v) = 0 as a polynomial identity: substitute w_i ↦ −v_i
        let args: Vec<Poly> = (0..n)
            .map(|i| Poly::var(n, i))
            .chain((0..n).map(|i| Poly::var(n, i).neg()))
            .collect();
        for zk in &self.z {
            assert!(
                zk.compose(&args).is_zero(),
                "z(v, -v) must vanish identically"
            );
        }
    }

    /// Evaluate the product `v * w`.
    pub fn multiply(
        &self,
        v: &[BigRational],
        w: &[BigRational],
    ) -> Result<Vec<BigRational>, LieAlgebraError> {
        let n = self.dim();
        for len in [v.len(), w.len()] {
            if len != n {
                return Err(LieAlgebraError::Dimension {
                    expected: n,
                    got: len,
                });
            }
        }
        let point: Vec<BigRational> = v.iter().chain(w.iter()).cloned().collect();
        Ok(self.z.iter().map(|zk| zk.eval_rational(&point)).collect())
    }

    /// Floating-point product for sampling probes.
    pub fn multiply_f64(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim());
        assert_eq!(w.len(), self.dim());
        let point: Vec<f64> = v.iter().chain(w.iter()).copied().collect();
        self.z.iter().map(|zk| zk.eval_f64(&point)).collect()
    }

    /// Group inverse: in exponential coordinates simply `−v`.
    pub fn inverse(&self, v: &[BigRational]) -> Result<Vec<BigRational>, LieAlgebraError> {
        if v.len() != self.dim() {
            return Err(LieAlgebraError::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(v.iter().map(|x| -x).collect())
    }
}

pub fn group_multiply(
    law: &GroupLaw,
    v: &[BigRational],
    w: &[BigRational],
) -> Result<Vec<BigRational>, LieAlgebraError> {
    law.multiply(v, w)
}

pub fn group_inverse(law: &GroupLaw, v: &[BigRational]) -> Result<Vec<BigRational>, LieAlgebraError> {
    law.inverse(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A vector field `Σ_i a_i(v) ∂_i` with polynomial coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVectorField {
    coeffs: Vec<Poly>,
}

impl PolyVectorField {
    pub fn new(coeffs: Vec<Poly>) -> Self {
        let n = coeffs.len();
        assert!(coeffs.iter().all(|c| c.nvars() == n));
        PolyVectorField { coeffs }
    }

    /// Coefficient of `∂_i` (0-based).
    pub fn coeff(&self, i: usize) -> &Poly {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[Poly] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Apply the field to a polynomial as a derivation.
    pub fn apply(&self, f: &Poly) -> Poly {
        let mut out = Poly::zero(f.nvars());
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            out = out.add(&a.mul(&f.deriv(i)));
        }
        out
    }

    /// Commutator `[F, G] = F∘G − G∘F`, again a vector field.
    pub fn commutator(&self, other: &PolyVectorField) -> PolyVectorField {
        let n = self.dim();
        assert_eq!(n, other.dim());
        let coeffs = (0..n)
            .map(|k| {
                let mut c = Poly::zero(n);
                for i in 0..n {
                    c = c.add(&self.coeffs[i].mul(&other.coeffs[k].deriv(i)));
                    c = c.sub(&other.coeffs[i].mul(&self.coeffs[k].deriv(i)));
                }
                c
            })
            .collect();
        PolyVectorField { coeffs }
    }

    pub fn scale(&self, r: &BigRational) -> PolyVectorField {
        PolyVectorField {
            coeffs: self.coeffs.iter().map(|c| c.scale(r)).collect(),
        }
    }

    pub fn add(&self, other: &PolyVectorField) -> PolyVectorField {
        assert_eq!(self.dim(), other.dim());
        PolyVectorField {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Poly::is_zero)
    }

    /// The constant coordinate field `∂_j` (0-based).
    pub fn coordinate(n: usize, j: usize) -> PolyVectorField {
        let coeffs = (0..n)
            .map(|i| {
                if i == j {
                    Poly::one(n)
                } else {
                    Poly::zero(n)
                }
            })
            .collect();
        PolyVectorField { coeffs }
    }
}

/// Left-invariant fields `L_j f(v) = ∂_t f(v * t e_j)|_{t=0}` or
/// right-invariant fields `R_j f(v) = ∂_t f(t e_j * v)|_{t=0}`, read off the
/// group law: the coefficient of `∂_i` in `L_j` is `∂z_i/∂w_j (v, 0)`, and
/// in `R_j` it is `∂z_i/∂v_j (0, v)`.
pub fn invariant_fields(law: &GroupLaw, side: Side) -> Vec<PolyVectorField> {
    let n = law.dim();
    let v_slots: Vec<usize> = (0..n).collect();
    let w_slots: Vec<usize> = (n..2 * n).collect();
    (0..n)
        .map(|j| {
            let coeffs = (0..n)
                .map(|i| match side {
                    Side::Left => law.z[i].deriv(n + j).project_zero(&v_slots),
                    Side::Right => law.z[i].deriv(j).project_zero(&w_slots),
                })
                .collect();
            PolyVectorField::new(coeffs)
        })
        .collect()
}
