use std::fmt;

use super::ast::{BinaryOp, Expr, Func};
use super::{parse, ExprError};
use crate::numerics::{Dual2, Scalar};

/// Integer exponents up to this magnitude are expanded into multiplications.
const MAX_INT_POWER: f64 = 64.0;

#[derive(Clone, Debug, PartialEq)]
enum Op {
    Const(f64),
    Param(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    PowI(i32),
    Pow,
    Call(Func),
}

/// An expression flattened to a postfix tape, evaluable over `f64` and
/// [`Dual2`].
#[derive(Clone)]
pub struct CompiledExpr {
    source: String,
    ast: Expr,
    arity: usize,
    tape: Vec<Op>,
    // Printed subexpression rooted at each tape entry, for domain errors.
    labels: Vec<String>,
}

impl fmt::Debug for CompiledExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompiledExpr")
            .field("source", &self.source)
            .field("arity", &self.arity)
            .finish()
    }
}

fn integer_exponent(e: &Expr) -> Option<i32> {
    let value = match e {
        Expr::Const(c) => *c,
        Expr::Neg(inner) => match **inner {
            Expr::Const(c) => -c,
            _ => return None,
        },
        _ => return None,
    };
    (value.fract() == 0.0 && value.abs() <= MAX_INT_POWER).then_some(value as i32)
}

fn emit(e: &Expr, tape: &mut Vec<Op>, labels: &mut Vec<String>) {
    let op = match e {
        Expr::Const(c) => Op::Const(*c),
        Expr::Param { index, .. } => Op::Param(*index),
        Expr::Neg(a) => {
            emit(a, tape, labels);
            Op::Neg
        }
        Expr::Call(func, a) => {
            emit(a, tape, labels);
            Op::Call(*func)
        }
        Expr::Binary(BinaryOp::Pow, a, b) if integer_exponent(b).is_some() => {
            emit(a, tape, labels);
            Op::PowI(integer_exponent(b).expect("guarded"))
        }
        Expr::Binary(op, a, b) => {
            emit(a, tape, labels);
            emit(b, tape, labels);
            match op {
                BinaryOp::Add => Op::Add,
                BinaryOp::Sub => Op::Sub,
                BinaryOp::Mul => Op::Mul,
                BinaryOp::Div => Op::Div,
                BinaryOp::Pow => Op::Pow,
            }
        }
    };
    tape.push(op);
    labels.push(e.to_string());
}

fn max_param(e: &Expr) -> Option<usize> {
    match e {
        Expr::Const(_) => None,
        Expr::Param { index, .. } => Some(*index),
        Expr::Neg(a) | Expr::Call(_, a) => max_param(a),
        Expr::Binary(_, a, b) => max_param(a).max(max_param(b)),
    }
}

impl CompiledExpr {
    /// Parses and compiles `source` over the ordered parameter list.
    pub fn new(source: &str, params: &[String]) -> Result<Self, ExprError> {
        let ast = parse(source, params)?;
        Ok(Self::from_ast(source, ast, params.len()))
    }

    pub fn from_ast(source: &str, ast: Expr, arity: usize) -> Self {
        assert!(
            max_param(&ast).map_or(true, |i| i < arity),
            "parameter index out of range"
        );
        let mut tape = Vec::new();
        let mut labels = Vec::new();
        emit(&ast, &mut tape, &mut labels);
        Self {
            source: source.to_string(),
            ast,
            arity,
            tape,
            labels,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn check_len(&self, got: usize) -> Result<(), ExprError> {
        if got != self.arity {
            return Err(ExprError::PointArity {
                expected: self.arity,
                got,
            });
        }
        Ok(())
    }

    fn domain(&self, at: usize, message: &str) -> ExprError {
        ExprError::Domain {
            subexpr: self.labels[at].clone(),
            message: message.to_string(),
        }
    }

    /// Evaluates over any [`Scalar`]; `inputs[i]` is the value of parameter
    /// `i` and `dim` the derivative dimension used for constants.
    pub fn eval_generic<S: Scalar>(&self, inputs: &[S], dim: usize) -> Result<S, ExprError> {
        self.check_len(inputs.len())?;
        let mut stack: Vec<S> = Vec::with_capacity(self.tape.len());
        for (at, op) in self.tape.iter().enumerate() {
            let out = match op {
                Op::Const(c) => S::constant(*c, dim),
                Op::Param(i) => inputs[*i].clone(),
                Op::Neg => stack.pop().expect("tape").neg(),
                Op::Call(func) => {
                    let a = stack.pop().expect("tape");
                    let x = a.value();
                    match func {
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                        Func::Tan => a.tan(),
                        Func::Exp => a.exp(),
                        Func::Log if x <= 0.0 => {
                            return Err(self.domain(at, "log of non-positive value"))
                        }
                        Func::Log => a.ln(),
                        Func::Sqrt if x < 0.0 => {
                            return Err(self.domain(at, "sqrt of negative value"))
                        }
                        Func::Sqrt => a.sqrt(),
                    }
                }
                Op::PowI(n) => {
                    let a = stack.pop().expect("tape");
                    if *n < 0 && a.value() == 0.0 {
                        return Err(self.domain(at, "negative power of zero"));
                    }
                    a.powi(*n)
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => {
                    let b = stack.pop().expect("tape");
                    let a = stack.pop().expect("tape");
                    match op {
                        Op::Add => a.add(&b),
                        Op::Sub => a.sub(&b),
                        Op::Mul => a.mul(&b),
                        Op::Div if b.value() == 0.0 => {
                            return Err(self.domain(at, "division by zero"))
                        }
                        Op::Div => a.div(&b),
                        Op::Pow if a.value() <= 0.0 => {
                            return Err(self.domain(at, "non-integer power of non-positive base"))
                        }
                        _ => a.powf(&b),
                    }
                }
            };
            if !out.all_finite() {
                return Err(self.domain(at, "non-finite result"));
            }
            stack.push(out);
        }
        Ok(stack.pop().expect("non-empty tape"))
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        self.eval_generic(point, 0)
    }

    /// Value, gradient and Hessian with respect to the parameters listed in
    /// `active` (in that order); other parameters are held constant.
    pub fn eval_dual2(&self, point: &[f64], active: &[usize]) -> Result<Dual2, ExprError> {
        self.check_len(point.len())?;
        let dim = active.len();
        let inputs: Vec<Dual2> = point
            .iter()
            .enumerate()
            .map(|(i, x)| match active.iter().position(|a| *a == i) {
                Some(slot) => Dual2::variable(*x, slot, dim),
                None => Dual2::constant(*x, dim),
            })
            .collect();
        self.eval_generic(&inputs, dim)
    }

    /// Dual evaluation with every parameter active.
    pub fn jet(&self, point: &[f64]) -> Result<Dual2, ExprError> {
        let all: Vec<usize> = (0..self.arity).collect();
        self.eval_dual2(point, &all)
    }
}
