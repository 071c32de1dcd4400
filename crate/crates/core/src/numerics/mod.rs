//! Scalar and small dense linear-algebra substrate.

pub mod dual2;
pub mod fd;
pub mod linalg;

pub use dual2::{Dual2, Scalar};
pub use linalg::{
    extend_orthonormal, gram_schmidt, inverse, metric_inner, solve, span_basis, sym_eigen,
    NumericsError,
};

/// Dense column vector; every vector in the crate has dimension at most 32.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used for Gram matrices, projectors and Jacobians.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}
