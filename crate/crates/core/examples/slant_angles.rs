//! Slant angles of the two distributions of the built-in example, from the
//! compressed spectrum and from random probes.

use kenmotsu::scenario::Scenario;
use kenmotsu::slant::BiSlantDecomposition;
use kenmotsu::submanifold::SubmanifoldFrame;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let sc = Scenario::load("example-4.1").unwrap();
    let p = [1.0, 1.0, 0.2, 1.0, 0.0];
    let frame = SubmanifoldFrame::build(&sc.immersion, &sc.structure, &p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dec = BiSlantDecomposition::build(&frame, sc.d1.as_ref().unwrap(), sc.d2.as_ref().unwrap(), &mut rng).unwrap();
    for angle in [&dec.theta1, &dec.theta2] {
        println!("{}: theta = {:.12}, cos^2 = {:.12}", angle.name, angle.theta, angle.cos_sq);
        println!("  compressed spectrum {:?}", angle.compressed_spectrum);
        println!("  full-P angle constant: {} (spread {:.3e})", angle.is_pointwise_slant(), angle.full_spread());
    }
    println!("cos^2 theta2 = 25/(s^2 - 144) with s = 15: {:.12}", 25.0 / (15.0f64.powi(2) - 144.0));
    println!("proper: {}, dim nu = {}", dec.is_proper(), dec.nu.len());
}
