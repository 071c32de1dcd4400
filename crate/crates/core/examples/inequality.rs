//! Both sides of the second fundamental form inequality on the product
//! control, where the mixed totally geodesic hypothesis holds.

use kenmotsu::scenario::Scenario;
use kenmotsu::slant::BiSlantDecomposition;
use kenmotsu::submanifold::SubmanifoldFrame;
use kenmotsu::warped::{inequality_values, mixed_mass, AdaptedFrame};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    for name in ["product", "example-4.1"] {
        let sc = Scenario::load(name).unwrap();
        let spec = sc.warped.as_ref().unwrap();
        let p = sc.sample_points(sc.grid.seed, None).remove(0);
        let frame = SubmanifoldFrame::build(&sc.immersion, &sc.structure, &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dec = BiSlantDecomposition::build(&frame, sc.d1.as_ref().unwrap(), sc.d2.as_ref().unwrap(), &mut rng).unwrap();
        let adapted = AdaptedFrame::build(&frame, &dec).unwrap();
        let dlnf = spec.log_warping_differential(&sc.immersion.params, &p).unwrap();
        let v = inequality_values(&frame, &dec, &adapted, &dlnf);
        println!(
            "{name:<12} |h|^2 = {:.6}  bound = {:.6}  re-sum gap = {:.2e}  mixed h mass = {:.2e}",
            v.norm_sq,
            v.bound,
            (v.resum() - v.norm_sq).abs(),
            mixed_mass(&frame, &dec)
        );
    }
}
