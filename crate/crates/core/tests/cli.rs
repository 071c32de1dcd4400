use std::path::PathBuf;
use std::process::{Command, Output};

fn verify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verify")).args(args).output().expect("binary runs")
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kenmotsu-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const PRODUCT: &str = include_str!("../scenarios/product.toml");

#[test]
fn passing_scenario_exits_zero() {
    let out = verify(&["product"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let first = &json["suites"][0]["checks"][0];
    for field in ["suite", "check", "eq_ref", "max_residual", "tolerance", "status"] {
        assert!(first.get(field).is_some(), "missing {field}");
    }
}

#[test]
fn failing_assertions_exit_one() {
    assert_eq!(verify(&["example-4.1"]).status.code(), Some(1));
    assert_eq!(verify(&["corrupted", "--suite", "axioms"]).status.code(), Some(1));
}

#[test]
fn invalid_scenarios_exit_two() {
    let out = verify(&["no-such-scenario"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("built-in"));

    let broken = scratch("broken.toml", &PRODUCT.replace("f = \"exp(t)\"", "f = \"exp(w)\""));
    let out = verify(&[broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`w`"));

    let syntax = scratch("syntax.toml", "name = \"x\"\n[ambient\n");
    assert_eq!(verify(&[syntax.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(verify(&["product", "--tol-scale", "0"]).status.code(), Some(2));
}

#[test]
fn degenerate_immersion_exits_three() {
    // The `a` direction collapses at a = 0, which the explicit grid hits.
    let body = PRODUCT
        .replace("components = [\"a\",", "components = [\"a*a\",")
        .replace("random = 20", "points = [[0.0, 0.1, 0.2, 0.3, 0.4]]");
    let path = scratch("degenerate.toml", &body);
    let out = verify(&[path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn csv_has_one_row_per_check_and_sample() {
    let out = verify(&["product", "--suite", "slant", "--format", "csv", "--grid", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,check,eq_ref,sample,value,role,tolerance,status"));
    let rows: Vec<&str> = lines.filter(|l| l.starts_with("slant,h-symmetric,")).collect();
    assert_eq!(rows.len(), 32);
}

#[test]
fn out_writes_file_and_prints_summary() {
    let dir = std::env::temp_dir().join(format!("kenmotsu-cli-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = verify(&["product", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("coverage:"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["metadata"]["seed"], 3);
}
