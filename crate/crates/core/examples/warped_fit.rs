//! Fits the warped product metric of the built-in example and compares the
//! fiber factor with f^2.

use kenmotsu::scenario::Scenario;

fn main() {
    let sc = Scenario::load("example-4.1").unwrap();
    let spec = sc.warped.as_ref().unwrap();
    let points = sc.sample_points(sc.grid.seed, None);
    let fit = kenmotsu::warped::fit_warped_metric(&sc.immersion, &sc.structure, spec, &points).unwrap();
    println!("reference point {:?}", fit.reference);
    for s in fit.samples.iter().take(5) {
        println!(
            "factor {:.10}  predicted {:.10}  residual {:.2e}  conformality {:.2e}  time {:?}",
            s.factor, s.predicted, s.factor_residual, s.conformality, s.time_dependence
        );
    }
    println!("max factor residual {:.3e}", fit.max_of(|s| s.factor_residual));
    println!("max base/fiber coupling {:.3e}", fit.max_of(|s| s.off_diagonal));
}
