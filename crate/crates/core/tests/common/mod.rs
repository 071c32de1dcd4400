#![allow(dead_code)]

use kenmotsu::expr::{BinaryOp, CompiledExpr, Expr, Func};
use kenmotsu::numerics::{fd, Matrix};
use proptest::prelude::*;

pub const VARS: [&str; 3] = ["x", "y", "z"];

pub fn var_names() -> Vec<String> {
    VARS.iter().map(|s| s.to_string()).collect()
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0usize..3).prop_map(|i| Expr::param(i, VARS[i])),
        (0.0f64..2.0).prop_map(|c| Expr::Const((c * 64.0).round() / 64.0)),
    ]
}

fn one_plus_square(a: Expr) -> Expr {
    Expr::binary(BinaryOp::Add, Expr::Const(1.0), Expr::binary(BinaryOp::Mul, a.clone(), a))
}

/// Random expressions that stay smooth and finite on `[-1, 1]^3`: every
/// `log`, `sqrt`, division and real power is applied to `1 + a^2`, and
/// `exp` and `tan` only see bounded arguments.
pub fn smooth_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Mul, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Div, a, one_plus_square(b))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Cos, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Exp, Expr::call(Func::Sin, a))),
            inner
                .clone()
                .prop_map(|a| Expr::call(Func::Tan, Expr::binary(BinaryOp::Mul, Expr::Const(0.5), Expr::call(Func::Sin, a)))),
            inner.clone().prop_map(|a| Expr::call(Func::Log, one_plus_square(a))),
            inner.clone().prop_map(|a| Expr::call(Func::Sqrt, one_plus_square(a))),
            (inner.clone(), 0u8..4).prop_map(|(a, k)| Expr::binary(BinaryOp::Pow, a, Expr::Const(k as f64))),
            (inner, 0.25f64..2.0).prop_map(|(a, k)| {
                Expr::binary(BinaryOp::Pow, one_plus_square(a), Expr::Const((k * 8.0).round() / 8.0))
            }),
        ]
    })
}

pub fn point() -> impl Strategy<Value = [f64; 3]> {
    [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0]
}

/// Largest relative gap between the forward-mode gradient and Hessian and
/// their central-difference counterparts; the reference scale is at least 1.
pub fn dual_vs_fd(ast: &Expr, p: &[f64; 3]) -> f64 {
    let compiled = CompiledExpr::from_ast("generated", ast.clone(), 3);
    let jet = compiled.jet(p).expect("evaluates");
    let value = |q: &[f64]| compiled.eval(q).expect("evaluates");
    let gradient = |q: &[f64]| compiled.jet(q).expect("evaluates").gradient();
    let fd_grad = fd::central_gradient(value, p, fd::STEP);
    let fd_hess: Matrix = fd::hessian_from_gradient(gradient, p, fd::STEP);
    let grad = jet.gradient();
    let hess = jet.hessian();
    let gscale = grad.amax().max(1.0);
    let hscale = hess.amax().max(1.0);
    ((grad - fd_grad).amax() / gscale).max((hess - fd_hess).amax() / hscale)
}
