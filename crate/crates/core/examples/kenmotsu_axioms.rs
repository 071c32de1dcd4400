//! Checks the almost contact metric and Kenmotsu identities of the model
//! space at random points, then the Christoffel symbols at one point.

use kenmotsu::ambient::{check_kenmotsu_axioms, KenmotsuStructure};
use kenmotsu::numerics::Vector;
use kenmotsu::runner::axiom_samples;

fn main() {
    let structure = KenmotsuStructure::new(2);
    let samples = axiom_samples(structure.dim(), 50, 7);
    for r in check_kenmotsu_axioms(&structure, &samples).unwrap() {
        println!("{:<40} {:.3e}", r.check, r.max_residual);
    }
    let point = Vector::from_vec(vec![0.1, 0.2, 0.3, 0.4, 0.5]);
    let gamma = structure.christoffel(&point).unwrap();
    // dt^2 + e^{2t}(dx^2 + dy^2): Gamma^t_xx = -e^{2t}, Gamma^x_xt = 1.
    println!("Gamma^t_x1x1 = {:.12} (-e^1 = {:.12})", gamma.get(4, 0, 0), -1f64.exp());
    println!("Gamma^x1_x1t = {:.12}", gamma.get(0, 0, 4));
}
