//! Charts on filtered manifolds: frames of vector fields adapted to a
//! weighted filtration, with symbolic coefficient functions.
//!
//! A chart is a coordinate box together with a graded weight structure and
//! one or more named frames `X_1, …, X_n`.  Validating a frame produces its
//! structure functions `[X_i, X_j] = Σ_k c_{ijk}(x) X_k` and certifies the
//! adaptedness property (`c_{ijk} ≡ 0` whenever `υ_k > υ_i + υ_j`).  From a
//! validated frame, each point `x` carries an osculating graded nilpotent
//! Lie algebra (the constants with `υ_k = υ_i + υ_j`, frozen at `x`) and
//! hence an osculating group; the leftover constants are a higher-order
//! bilinear remainder.
//!
//! On the operator side, words in the frame fields with scalar coefficient
//! functions normalize uniquely to `Σ_α c_α(x) 𝕏^α` with ascending-ordered
//! powers; the degree-`N` part of that normal form, with the frame symbols
//! replaced by the osculating generators, is the principal symbol.  Frame
//! changes act through pointwise transition matrices that are
//! block-upper-triangular in the weight strata, and the principal symbol is
//! invariant under the block-diagonal part.

mod chart;
mod diffop;
mod osculate;
mod transition;

pub use chart::{frame_validate, Chart, Frame, FrameCertificate};
pub use diffop::{normal_order, op_parse, principal_symbol, reexpress, DiffOp, OpExpr};
pub use osculate::{
    higher_order_split, osculating_algebra, osculating_group_law, remainder_embedding,
};
pub use transition::{frame_invariance_check, transition, InvarianceReport, Transition};

use expr_dsl::Expr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("domain box has {got} intervals, dimension is {expected}")]
    DomainDimension { expected: usize, got: usize },
    #[error("domain interval {index} is empty or reversed: [{lo}, {hi}]")]
    EmptyInterval { index: usize, lo: f64, hi: f64 },
    #[error("frame has {got} fields, dimension is {expected}")]
    FrameShape { expected: usize, got: usize },
    #[error("field {field} of the frame has {got} coefficients, dimension is {expected}")]
    FieldShape { field: usize, expected: usize, got: usize },
    #[error("frame coefficient references variable x{var}, dimension is {dim}")]
    VariableOutOfRange { var: usize, dim: usize },
    #[error("operator references frame field X{field}, frame has {dim} fields")]
    FieldOutOfRange { field: usize, dim: usize },
    #[error("no frame named {0:?} in the chart")]
    UnknownFrame(String),
    #[error("frame is degenerate at x = {x:?} (|det| = {det:.3e})")]
    Degenerate { x: Vec<f64>, det: f64 },
    #[error(
        "adaptedness fails: c_{{{i},{j},{k}}} ≠ 0 at x = {x:?} although υ_{k} > υ_{i} + υ_{j}"
    )]
    NotAdapted { i: usize, j: usize, k: usize, x: Vec<f64> },
    #[error("point has {got} coordinates, dimension is {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("point {x:?} lies outside the chart domain")]
    OutsideDomain { x: Vec<f64> },
    #[error("osculating constants at x = {x:?}: {source}")]
    Osculation {
        x: Vec<f64>,
        source: nilpotent_group::LieAlgebraError,
    },
    #[error("operator expression error at byte {at}: {message}")]
    OpParse { at: usize, message: String },
    #[error("operator has a term of graded order {order}, above the requested {limit}")]
    OrderExceeded { order: u32, limit: u32 },
    #[error("frames are not related by a block-upper-triangular transition at x = {x:?}: T[{row},{col}] = {value:.3e} couples weight {wrow} into weight {wcol}")]
    TransitionShape {
        x: Vec<f64>,
        row: usize,
        col: usize,
        value: f64,
        wrow: u32,
        wcol: u32,
    },
    #[error("cannot express the frame change in closed form (non-polynomial coefficients)")]
    NotSymbolic,
    #[error("evaluating a coefficient at x = {x:?}: {source}")]
    Eval {
        x: Vec<f64>,
        source: expr_dsl::EvalError,
    },
}

/// Shorthand for building the zero expression.
fn zero() -> Expr {
    Expr::num_int(0)
}
