//! Induced metric, second fundamental form and mean curvature of a
//! parametric submanifold.

use kenmotsu::ambient::KenmotsuStructure;
use kenmotsu::submanifold::{Immersion, SubmanifoldFrame};

fn main() {
    let structure = KenmotsuStructure::new(2);
    let immersion = Immersion::parse(
        &["a", "b", "t"],
        &["cos(a)", "sin(a)", "b", "a*b", "t"],
        &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
    )
    .unwrap();
    let frame = SubmanifoldFrame::build(&immersion, &structure, &[0.3, 0.5, 0.2]).unwrap();
    let sff = frame.second_fundamental();
    println!("induced metric {}", frame.induced);
    println!("|h|^2          = {:.12}", sff.norm_sq);
    println!("sum (h^r_ij)^2 = {:.12}", sff.coefficient_sum);
    println!("|H|            = {:.12}", frame.norm(&sff.mean_curvature));
    let x = frame.tangent[0].clone();
    let y = frame.tangent[1].clone();
    println!("|h(X,Y) - h(Y,X)| = {:.3e}", frame.norm(&(frame.h(&x, &y) - frame.h(&y, &x))));
    println!("|h(xi, X)|        = {:.3e}", frame.norm(&frame.h(&frame.xi(), &x)));
}
