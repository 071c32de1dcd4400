use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use kenmotsu::runner::{run, RunOptions, Suite};
use kenmotsu::scenario::Scenario;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Axioms,
    Slant,
    Warped,
    Inequality,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Verify the Kenmotsu structure, slant data, warped product identities and
/// the inequality on a scenario.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Scenario file or built-in name (example-4.1, product, invariant,
    /// anti-invariant, corrupted).
    scenario: String,
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    /// Replace the scenario grid by N points per parameter.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Multiply every tolerance.
    #[arg(long, value_name = "X", default_value_t = 1.0)]
    tol_scale: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout; the summary table then goes
    /// to stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let scenario = match Scenario::load(&cli.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let suites = match cli.suite {
        SuiteArg::All => Suite::ALL.to_vec(),
        SuiteArg::Axioms => vec![Suite::Axioms],
        SuiteArg::Slant => vec![Suite::Slant],
        SuiteArg::Warped => vec![Suite::Warped],
        SuiteArg::Inequality => vec![Suite::Inequality],
    };
    let opts = RunOptions {
        suites,
        grid: cli.grid,
        seed: cli.seed,
        tol_scale: cli.tol_scale,
    };
    let report = match run(&scenario, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let body = match cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
            print!("{}", report.summary_table());
        }
        None => println!("{body}"),
    }
    if report.failed() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
