//! Scalar expression language for immersion components and scalar
//! functions on the parameter domain.
//!
//! Grammar, loosest binding first: `+ -`, `* /`, unary `-`, `^` (right
//! associative), then atoms: decimal numbers, parameter names, calls to
//! `sin cos tan exp log sqrt`, and parenthesized expressions.

mod ast;
mod compile;
mod parser;

pub use ast::{BinaryOp, Expr, Func};
pub use compile::CompiledExpr;
pub use parser::parse;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{function}` takes {expected} argument(s), got {got} (byte {offset})")]
    Arity {
        function: String,
        expected: usize,
        got: usize,
        offset: usize,
    },
    #[error("expected {expected} parameter values, got {got}")]
    PointArity { expected: usize, got: usize },
    #[error("domain error in `{subexpr}`: {message}")]
    Domain { subexpr: String, message: String },
}
