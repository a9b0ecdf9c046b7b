//! Linear algebra, dual numbers, random streams, and the finite-difference
//! gradient oracle.

mod dual;
mod fd;
mod linalg;
mod rng;
pub mod special;

pub use dual::{Dual, Real, Tangent};
pub use fd::{dual_eval, fd_gradient, fd_gradient_scaled, relative_error};
pub use linalg::{
    cholesky, cholesky_inverse, cholesky_solve, dot, mvn_logpdf, solve_lower,
    solve_lower_transpose, Matrix,
};
pub use rng::RngStream;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite function value at coordinate {index}")]
    NonFiniteEvaluation { index: usize },
}
