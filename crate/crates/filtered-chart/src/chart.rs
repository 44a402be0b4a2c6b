//! Charts, frames, and the adaptedness certificate.
//!
//! A frame is a square matrix of coefficient expressions: `X_i = Σ_k
//! a_{ik}(x) ∂_k`.  Validation computes the brackets `[X_i, X_j]`
//! symbolically, re-expands them in the frame to obtain the structure
//! functions `c_{ijk}(x)`, and checks that every `c_{ijk}` with
//! `υ_k > υ_i + υ_j` vanishes on the chart domain.  When all coefficients
//! are polynomial the expansion is exact (adjugate over the polynomial
//! ring); otherwise the check runs pointwise over a sample grid.

use std::collections::BTreeMap;

use expr_dsl::{Expr, VarLetter};
use graded_core::GradedStructure;
use nilpotent_group::Poly;
use num_rational::BigRational;
use num_traits::Zero;

use crate::{zero, ChartError};

/// How small `|det|` of the frame matrix may get before the frame counts
/// as degenerate on the domain.
const DEGENERACY_TOL: f64 = 1e-8;

/// Pointwise tolerance for `c_{ijk} ≈ 0` when no closed form is available.
const ADAPTED_TOL: f64 = 1e-10;

/// A frame of vector fields `X_i = Σ_k coeffs[i][k] ∂_k` on a chart.
#[derive(Debug, Clone)]
pub struct Frame {
    coeffs: Vec<Vec<Expr>>,
}

impl Frame {
    pub fn new(coeffs: Vec<Vec<Expr>>) -> Frame {
        Frame { coeffs }
    }

    /// The coordinate frame `∂_1, …, ∂_n`.
    pub fn coordinate(n: usize) -> Frame {
        let coeffs = (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| if i == k { Expr::num_int(1) } else { zero() })
                    .collect()
            })
            .collect();
        Frame { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of `∂_k` in `X_i` (both 1-based).
    pub fn coeff(&self, i: usize, k: usize) -> &Expr {
        &self.coeffs[i - 1][k - 1]
    }

    pub fn rows(&self) -> &[Vec<Expr>] {
        &self.coeffs
    }

    /// Apply `X_i` (1-based) to a scalar expression: `Σ_k a_{ik} ∂_k f`.
    pub fn apply(&self, i: usize, f: &Expr) -> Expr {
        let mut out = zero();
        for (k, a) in self.coeffs[i - 1].iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let term = Expr::Mul(Box::new(a.clone()), Box::new(f.diff(k + 1)));
            out = Expr::Add(Box::new(out), Box::new(term));
        }
        out.simplify()
    }

    /// Coefficient matrix `A(x) = (a_{ik}(x))` with rows indexed by the
    /// field and columns by the coordinate.
    pub fn matrix_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, ChartError> {
        self.coeffs
            .iter()
            .map(|row| {
                row.iter()
                    .map(|a| {
                        a.eval(x).map_err(|source| ChartError::Eval {
                            x: x.to_vec(),
                            source,
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// Exact coefficient matrix at a rational point, when every entry
    /// evaluates exactly there.
    pub fn matrix_at_rational(&self, x: &[BigRational]) -> Option<Vec<Vec<BigRational>>> {
        self.coeffs
            .iter()
            .map(|row| row.iter().map(|a| a.eval_rational(x)).collect())
            .collect()
    }
}

/// A coordinate box with a graded weight structure and named frames.
#[derive(Debug, Clone)]
pub struct Chart {
    graded: GradedStructure,
    domain: Vec<(f64, f64)>,
    frames: BTreeMap<String, Frame>,
    samples_per_axis: usize,
}

impl Chart {
    pub fn new(graded: GradedStructure, domain: Vec<(f64, f64)>) -> Result<Chart, ChartError> {
        let n = graded.dim();
        if domain.len() != n {
            return Err(ChartError::DomainDimension {
                expected: n,
                got: domain.len(),
            });
        }
        for (index, &(lo, hi)) in domain.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(ChartError::EmptyInterval { index, lo, hi });
            }
        }
        Ok(Chart {
            graded,
            domain,
            frames: BTreeMap::new(),
            samples_per_axis: 7,
        })
    }

    pub fn graded(&self) -> &GradedStructure {
        &self.graded
    }

    pub fn dim(&self) -> usize {
        self.graded.dim()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    /// Register a frame under a name, checking its shape against the chart.
    pub fn add_frame(&mut self, name: &str, frame: Frame) -> Result<(), ChartError> {
        let n = self.dim();
        if frame.coeffs.len() != n {
            return Err(ChartError::FrameShape {
                expected: n,
                got: frame.coeffs.len(),
            });
        }
        for (i, row) in frame.coeffs.iter().enumerate() {
            if row.len() != n {
                return Err(ChartError::FieldShape {
                    field: i + 1,
                    expected: n,
                    got: row.len(),
                });
            }
            for a in row {
                let var = a.max_var_index();
                if var > n {
                    return Err(ChartError::VariableOutOfRange { var, dim: n });
                }
            }
        }
        self.frames.insert(name.to_string(), frame);
        Ok(())
    }

    pub fn frame(&self, name: &str) -> Result<&Frame, ChartError> {
        self.frames
            .get(name)
            .ok_or_else(|| ChartError::UnknownFrame(name.to_string()))
    }

    pub fn frame_names(&self) -> Vec<&str> {
        self.frames.keys().map(|s| s.as_str()).collect()
    }

    /// Grid density used by pointwise checks (points per axis, ≥ 2).
    pub fn set_samples_per_axis(&mut self, s: usize) {
        self.samples_per_axis = s.max(2);
    }

    pub fn samples_per_axis(&self) -> usize {
        self.samples_per_axis
    }

    pub fn check_point(&self, x: &[f64]) -> Result<(), ChartError> {
        if x.len() != self.dim() {
            return Err(ChartError::PointDimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let inside = x
            .iter()
            .zip(&self.domain)
            .all(|(&xi, &(lo, hi))| xi >= lo && xi <= hi);
        if inside {
            Ok(())
        } else {
            Err(ChartError::OutsideDomain { x: x.to_vec() })
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check_point(x).is_ok()
    }

    /// Evenly spaced lattice over the domain, endpoints included,
    /// `samples_per_axis` points per axis.
    pub fn sample_grid(&self) -> Vec<Vec<f64>> {
        let s = self.samples_per_axis;
        let n = self.dim();
        let axis: Vec<Vec<f64>> = self
            .domain
            .iter()
            .map(|&(lo, hi)| {
                (0..s)
                    .map(|t| lo + (hi - lo) * t as f64 / (s - 1) as f64)
                    .collect()
            })
            .collect();
        let mut grid = Vec::with_capacity(s.pow(n as u32));
        let mut odo = vec![0usize; n];
        loop {
            grid.push((0..n).map(|i| axis[i][odo[i]]).collect());
            let mut i = n;
            loop {
                if i == 0 {
                    return grid;
                }
                i -= 1;
                odo[i] += 1;
                if odo[i] < s {
                    break;
                }
                odo[i] = 0;
            }
        }
    }
}

/// Output of `frame_validate`: the brackets of a frame, its structure
/// functions, and the certified adaptedness of both to the grading.
#[derive(Debug, Clone)]
pub struct FrameCertificate {
    name: String,
    graded: GradedStructure,
    frame: Frame,
    /// `brackets[i][j][m]` = coefficient of `∂_{m+1}` in `[X_{i+1}, X_{j+1}]`.
    brackets: Vec<Vec<Vec<Expr>>>,
    /// `closed_form[i][j][k]` = `c_{i+1,j+1,k+1}` as an expression, when the
    /// frame expansion could be done symbolically.
    closed_form: Option<Vec<Vec<Vec<Expr>>>>,
}

impl FrameCertificate {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graded(&self) -> &GradedStructure {
        &self.graded
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.graded.dim()
    }

    /// Coefficients of `[X_i, X_j]` in the coordinate fields (1-based).
    pub fn bracket(&self, i: usize, j: usize) -> &[Expr] {
        &self.brackets[i - 1][j - 1]
    }

    /// The structure function `c_{ijk}` as an expression, if validation ran
    /// symbolically.
    pub fn structure_function(&self, i: usize, j: usize, k: usize) -> Option<&Expr> {
        self.closed_form
            .as_ref()
            .map(|c| &c[i - 1][j - 1][k - 1])
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_form.is_some()
    }

    /// All structure constants at a point: `out[i][j][k] = c_{i+1,j+1,k+1}(x)`.
    pub fn structure_at(&self, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>, ChartError> {
        let n = self.dim();
        let wrap = |source| ChartError::Eval {
            x: x.to_vec(),
            source,
        };
        if let Some(cf) = &self.closed_form {
            let mut out = vec![vec![vec![0.0; n]; n]; n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out[i][j][k] = cf[i][j][k].eval(x).map_err(wrap)?;
                    }
                }
            }
            return Ok(out);
        }
        let a = self.frame.matrix_at(x)?;
        let mt = transpose(&a);
        let mut out = vec![vec![vec![0.0; n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w: Vec<f64> = self.brackets[i][j]
                    .iter()
                    .map(|e| e.eval(x))
                    .collect::<Result<_, _>>()
                    .map_err(wrap)?;
                let c = solve_f64(mt.clone(), w).ok_or_else(|| ChartError::Degenerate {
                    x: x.to_vec(),
                    det: det_f64(mt.clone()),
                })?;
                out[i][j] = c;
            }
        }
        Ok(out)
    }

    /// Exact structure constants at a rational point, when the data allow
    /// it (polynomial/rational coefficients that evaluate exactly).
    pub fn structure_at_rational(
        &self,
        x: &[BigRational],
    ) -> Option<Vec<Vec<Vec<BigRational>>>> {
        let n = self.dim();
        if let Some(cf) = &self.closed_form {
            let mut out = vec![vec![vec![BigRational::zero(); n]; n]; n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out[i][j][k] = cf[i][j][k].eval_rational(x)?;
                    }
                }
            }
            return Some(out);
        }
        let a = self.frame.matrix_at_rational(x)?;
        let mt: Vec<Vec<BigRational>> = (0..n)
            .map(|m| (0..n).map(|k| a[k][m].clone()).collect())
            .collect();
        let mut out = vec![vec![vec![BigRational::zero(); n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w: Vec<BigRational> = self.brackets[i][j]
                    .iter()
                    .map(|e| e.eval_rational(x))
                    .collect::<Option<_>>()?;
                out[i][j] = solve_rational(mt.clone(), w)?;
            }
        }
        Some(out)
    }
}

/// Validate a named frame of a chart: compute its brackets, expand them in
/// the frame, and certify `c_{ijk} ≡ 0` whenever `υ_k > υ_i + υ_j`.
pub fn frame_validate(chart: &Chart, name: &str) -> Result<FrameCertificate, ChartError> {
    let frame = chart.frame(name)?.clone();
    let n = chart.dim();
    let weights = chart.graded().weights();

    // Brackets [X_i, X_j] = Σ_m (Σ_p a_ip ∂_p a_jm − a_jp ∂_p a_im) ∂_m.
    let mut brackets = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut row = Vec::with_capacity(n);
            for m in 0..n {
                if i == j {
                    row.push(zero());
                    continue;
                }
                let mut acc = zero();
                for p in 0..n {
                    let fwd = Expr::Mul(
                        Box::new(frame.coeffs[i][p].clone()),
                        Box::new(frame.coeffs[j][m].diff(p + 1)),
                    );
                    let bwd = Expr::Mul(
                        Box::new(frame.coeffs[j][p].clone()),
                        Box::new(frame.coeffs[i][m].diff(p + 1)),
                    );
                    acc = Expr::Add(Box::new(acc), Box::new(Expr::Sub(Box::new(fwd), Box::new(bwd))));
                }
                row.push(acc.simplify());
            }
            brackets[i][j] = row;
        }
    }

    // Degeneracy scan over the sample grid.
    let grid = chart.sample_grid();
    for x in &grid {
        let a = frame.matrix_at(x)?;
        let det = det_f64(transpose(&a));
        if det.abs() < DEGENERACY_TOL {
            return Err(ChartError::Degenerate { x: x.clone(), det });
        }
    }

    // Exact path: every frame coefficient and bracket coefficient is a
    // polynomial, so `c = adj(Aᵗ)·w / det(Aᵗ)` can be formed in the
    // polynomial ring and the vanishing checks are exact.
    let as_polys = |rows: &[Vec<Expr>]| -> Option<Vec<Vec<Poly>>> {
        rows.iter()
            .map(|row| row.iter().map(|e| Poly::from_expr(e, n)).collect())
            .collect()
    };
    let frame_polys = as_polys(&frame.coeffs);
    let bracket_polys: Option<Vec<Vec<Vec<Poly>>>> = brackets
        .iter()
        .map(|per_i| as_polys(per_i))
        .collect();

    let closed_form = match (frame_polys, bracket_polys) {
        (Some(ap), Some(wp)) => {
            let mt: Vec<Vec<Poly>> = (0..n)
                .map(|m| (0..n).map(|k| ap[k][m].clone()).collect())
                .collect();
            let det = poly_det(&mt);
            let adj = poly_adjugate(&mt);
            let det_const = det.homogeneous_degree(&vec![1; n]) == Some(0);
            let mut cube = vec![vec![vec![zero(); n]; n]; n];
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    for k in 0..n {
                        let mut num = Poly::zero(n);
                        for m in 0..n {
                            num = num.add(&adj[k][m].mul(&wp[i][j][m]));
                        }
                        if weights[k] > weights[i] + weights[j] {
                            if !num.is_zero() {
                                let x = worst_point(&grid, |x| {
                                    num.eval_f64(x) / det.eval_f64(x)
                                });
                                return Err(ChartError::NotAdapted {
                                    i: i + 1,
                                    j: j + 1,
                                    k: k + 1,
                                    x,
                                });
                            }
                            continue;
                        }
                        if num.is_zero() {
                            continue;
                        }
                        let e = if det_const {
                            num.scale(&det.constant_term().recip()).to_expr()
                        } else {
                            Expr::Div(Box::new(num.to_expr()), Box::new(det.to_expr()))
                        };
                        cube[i][j][k] = relabel_x(&e).simplify();
                    }
                }
            }
            Some(cube)
        }
        _ => {
            // Pointwise fallback: solve for c at every grid point and
            // insist the forbidden entries stay below tolerance.
            let mut worst: Option<(usize, usize, usize, Vec<f64>, f64)> = None;
            for x in &grid {
                let a = frame.matrix_at(x)?;
                let mt = transpose(&a);
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let w: Vec<f64> = brackets[i][j]
                            .iter()
                            .map(|e| e.eval(x))
                            .collect::<Result<_, _>>()
                            .map_err(|source| ChartError::Eval {
                                x: x.clone(),
                                source,
                            })?;
                        let c = solve_f64(mt.clone(), w).ok_or_else(|| {
                            ChartError::Degenerate {
                                x: x.clone(),
                                det: det_f64(mt.clone()),
                            }
                        })?;
                        for k in 0..n {
                            if weights[k] > weights[i] + weights[j] && c[k].abs() > ADAPTED_TOL {
                                let beat = worst
                                    .as_ref()
                                    .map(|(_, _, _, _, v)| c[k].abs() > *v)
                                    .unwrap_or(true);
                                if beat {
                                    worst =
                                        Some((i + 1, j + 1, k + 1, x.clone(), c[k].abs()));
                                }
                            }
                        }
                    }
                }
            }
            if let Some((i, j, k, x, _)) = worst {
                return Err(ChartError::NotAdapted { i, j, k, x });
            }
            None
        }
    };

    Ok(FrameCertificate {
        name: name.to_string(),
        graded: chart.graded().clone(),
        frame,
        brackets,
        closed_form,
    })
}

/// Point of the grid where `|f|` is largest (used for violation witnesses).
fn worst_point(grid: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut best = grid[0].clone();
    let mut best_val = -1.0;
    for x in grid {
        let v = f(x).abs();
        if v > best_val {
            best_val = v;
            best = x.clone();
        }
    }
    best
}

/// Rewrite `v`-letter variables as `x`-letter ones (cosmetic: structure
/// functions are functions of the chart point).
fn relabel_x(e: &Expr) -> Expr {
    match e {
        Expr::Num(_) => e.clone(),
        Expr::Var(_, j) => Expr::Var(VarLetter::X, *j),
        Expr::Add(a, b) => Expr::Add(Box::new(relabel_x(a)), Box::new(relabel_x(b))),
        Expr::Sub(a, b) => Expr::Sub(Box::new(relabel_x(a)), Box::new(relabel_x(b))),
        Expr::Mul(a, b) => Expr::Mul(Box::new(relabel_x(a)), Box::new(relabel_x(b))),
        Expr::Div(a, b) => Expr::Div(Box::new(relabel_x(a)), Box::new(relabel_x(b))),
        Expr::Pow(a, k) => Expr::Pow(Box::new(relabel_x(a)), *k),
        Expr::Neg(a) => Expr::Neg(Box::new(relabel_x(a))),
        Expr::Sin(a) => Expr::Sin(Box::new(relabel_x(a))),
        Expr::Cos(a) => Expr::Cos(Box::new(relabel_x(a))),
        Expr::Exp(a) => Expr::Exp(Box::new(relabel_x(a))),
    }
}

pub(crate) fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|m| (0..n).map(|k| a[k][m]).collect()).collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn det_f64(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for c in col..n {
                let v = m[col][c];
                m[row][c] -= f * v;
            }
        }
    }
    det
}

/// Solve `M c = b` with partial pivoting; `None` if `M` is singular to
/// working precision.
pub(crate) fn solve_f64(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &bb| m[a][col].abs().partial_cmp(&m[bb][col].abs()).unwrap())?;
        if m[pivot][col].abs() < 1e-14 {
            return None;
        }
        m.swap(pivot, col);
        b.swap(pivot, col);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for c in col..n {
                let v = m[col][c];
                m[row][c] -= f * v;
            }
            b[row] -= f * b[col];
        }
    }
    let mut c = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= m[row][k] * c[k];
        }
        c[row] = acc / m[row][row];
    }
    Some(c)
}

/// Exact solve over the rationals; `None` if singular.
pub(crate) fn solve_rational(
    mut m: Vec<Vec<BigRational>>,
    mut b: Vec<BigRational>,
) -> Option<Vec<BigRational>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(pivot, col);
        b.swap(pivot, col);
        for row in col + 1..n {
            if m[row][col].is_zero() {
                continue;
            }
            let f = &m[row][col] / &m[col][col];
            for c in col..n {
                let v = &m[col][c] * &f;
                m[row][c] -= v;
            }
            let v = &b[col] * &f;
            b[row] -= v;
        }
    }
    let mut c = vec![BigRational::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc -= &m[row][k] * &c[k];
        }
        c[row] = acc / &m[row][row];
    }
    Some(c)
}

fn poly_minor(m: &[Vec<Poly>], skip_r: usize, skip_c: usize) -> Vec<Vec<Poly>> {
    m.iter()
        .enumerate()
        .filter(|&(r, _)| r != skip_r)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|&(c, _)| c != skip_c)
                .map(|(_, p)| p.clone())
                .collect()
        })
        .collect()
}

/// Cofactor-expansion determinant over the polynomial ring (dimensions here
/// are small, so O(n!) is fine).
pub(crate) fn poly_det(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let nv = m[0][0].nvars();
    let mut det = Poly::zero(nv);
    for c in 0..n {
        if m[0][c].is_zero() {
            continue;
        }
        let cof = m[0][c].mul(&poly_det(&poly_minor(m, 0, c)));
        det = if c % 2 == 0 { det.add(&cof) } else { det.sub(&cof) };
    }
    det
}

/// Adjugate: `adj[k][m]` is the `(m,k)` cofactor, so `M⁻¹ = adj / det`.
pub(crate) fn poly_adjugate(m: &[Vec<Poly>]) -> Vec<Vec<Poly>> {
    let n = m.len();
    let nv = m[0][0].nvars();
    if n == 1 {
        return vec![vec![Poly::one(nv)]];
    }
    (0..n)
        .map(|k| {
            (0..n)
                .map(|mm| {
                    let minor = poly_det(&poly_minor(m, mm, k));
                    if (mm + k) % 2 == 0 {
                        minor
                    } else {
                        minor.neg()
                    }
                })
                .collect()
        })
        .collect()
}
