//! Numerical verification of pointwise bi-slant and warped product
//! submanifolds of the Kenmotsu model space.
//!
//! The crate evaluates every induced tensor of a parametric immersion with
//! exact forward-mode derivatives and checks geometric identities pointwise
//! at seeded sample points. See the `examples/` directory for one runnable
//! program per capability.

pub mod ambient;
pub mod check;
pub mod expr;
pub mod numerics;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod slant;
pub mod submanifold;
pub mod warped;
