//! Exact gradient and Hessian of an expression via forward-mode `Dual2`,
//! next to central finite differences.

use kenmotsu::expr::CompiledExpr;
use kenmotsu::numerics::fd;

fn main() {
    let params = vec!["u".to_string(), "v".to_string()];
    let f = CompiledExpr::new("sqrt(u*u + v*v + 13) * sin(u*v)", &params).unwrap();
    let p = [0.7, 1.2];
    let jet = f.jet(&p).unwrap();
    println!("f(p)      = {:.15}", f.eval(&p).unwrap());
    println!("gradient  = {}", jet.gradient().transpose());
    println!("hessian   = {}", jet.hessian());
    let approx = fd::central_gradient(|q| f.eval(q).unwrap(), &p, fd::STEP);
    println!("fd gap    = {:.3e}", (jet.gradient() - approx).amax());
}
