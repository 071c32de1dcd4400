//! Runs a built-in scenario and prints the per-equation summary, as the
//! `verify` binary does with `--out`.

use kenmotsu::runner::{run, RunOptions};
use kenmotsu::scenario::Scenario;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "product".into());
    let sc = Scenario::load(&name).unwrap();
    let report = run(&sc, &RunOptions { grid: Some(2), ..RunOptions::default() }).unwrap();
    print!("{}", report.summary_table());
    for d in report.discrepancies.iter().filter(|d| d.disagrees()) {
        println!("discrepancy: {} (max deviation {:?})", d.label, d.max_deviation);
    }
    println!("failed: {}", report.failed());
}
