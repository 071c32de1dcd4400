//! Parsing, printing and evaluating scenario expressions.

use kenmotsu::expr::{parse, CompiledExpr};

fn main() {
    let params = vec!["theta".to_string(), "phi".to_string()];
    for src in ["2*cos(theta - phi)", "-theta^2^0.5 + exp(-phi)/3", "log(1 + theta*phi)"] {
        let ast = parse(src, &params).unwrap();
        let value = CompiledExpr::new(src, &params).unwrap().eval(&[0.3, 1.1]).unwrap();
        println!("{src:<28} -> {ast:<36} = {value:.12}");
    }
    match parse("sin(theta", &params) {
        Ok(_) => unreachable!(),
        Err(e) => println!("error: {e}"),
    }
}
