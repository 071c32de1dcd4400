//! Verification reports: per-check aggregation over samples, the
//! per-equation summary, the discrepancy log and the coverage audit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::check::{Measurement, Role};

/// Equation labels a full run is expected to touch.
pub const IN_SCOPE: &[&str] = &[
    "2.1", "2.2", "2.3", "2.4", "2.5", "2.6", "2.7", "2.8", "2.8a", "2.8b", "2.8c", "2.9", "2.10", "2.11",
    "2.12", "3.1", "3.2", "3.3", "3.3a", "3.4", "3.5", "3.6", "3.7", "4.1", "4.2", "4.3", "4.4", "4.5", "4.6",
    "4.7", "4.8", "4.9", "4.10", "4.11", "4.12", "4.13", "4.14", "4.15", "4.16", "4.17", "4.18", "4.19",
    "4.20", "4.21", "4.22", "4.23", "4.24", "5.1", "5.10", "6.1", "6.2", "6.3", "6.11", "6.12", "6.13",
    "6.14", "6.15", "6.16", "6.17", "6.18", "6.19", "6.20",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Report,
    Skipped,
}

/// One sample's contribution to a check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleValue {
    pub sample: usize,
    pub value: Option<f64>,
    pub role: Role,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub check: String,
    pub eq_ref: Option<String>,
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub status: Status,
    pub asserted: bool,
    /// Sample with the largest value among the asserted samples (or among
    /// all samples when none is asserted).
    pub worst_sample: Option<usize>,
    pub reason: Option<String>,
    pub samples: Vec<SampleValue>,
}

impl CheckResult {
    /// Folds per-sample measurements of one check.
    pub fn aggregate(suite: &str, values: Vec<(usize, Measurement)>) -> Self {
        let first = &values[0].1;
        let (check, eq_ref, tolerance) = (first.check.clone(), first.eq_ref.clone(), first.tolerance);
        let asserted = values.iter().any(|(_, m)| m.role == Role::Asserted);
        let considered: Vec<&(usize, Measurement)> = values
            .iter()
            .filter(|(_, m)| if asserted { m.role == Role::Asserted } else { m.role != Role::Skipped })
            .collect();
        let mut worst: Option<(usize, f64)> = None;
        for (i, m) in &considered {
            let v = m.value.unwrap_or(f64::NAN);
            let key = if v.is_nan() { f64::INFINITY } else { v.abs() };
            if worst.map_or(true, |(_, w)| key > w) {
                worst = Some((*i, key));
            }
        }
        let worst_sample = worst.map(|(i, _)| i);
        let max_residual = worst_sample.and_then(|i| {
            considered
                .iter()
                .find(|(j, _)| *j == i)
                .and_then(|(_, m)| m.value)
                .map(f64::abs)
        });
        let status = if considered.is_empty() {
            Status::Skipped
        } else if !asserted {
            Status::Report
        } else if considered.iter().all(|(_, m)| m.within_tolerance()) {
            Status::Pass
        } else {
            Status::Fail
        };
        let reason = match status {
            Status::Skipped => values.iter().find_map(|(_, m)| m.note.clone()),
            Status::Fail => worst_sample.map(|i| {
                let note = values.iter().find(|(j, _)| *j == i).and_then(|(_, m)| m.note.clone());
                match note {
                    Some(n) => format!("exceeds tolerance at sample {i}: {n}"),
                    None => format!("exceeds tolerance at sample {i}"),
                }
            }),
            _ => None,
        };
        Self {
            suite: suite.into(),
            check,
            eq_ref,
            max_residual,
            tolerance,
            status,
            asserted,
            worst_sample,
            reason,
            samples: values
                .into_iter()
                .map(|(sample, m)| SampleValue {
                    sample,
                    value: m.value,
                    role: m.role,
                    note: m.note,
                })
                .collect(),
        }
    }

    /// A check that did not run at all.
    pub fn skipped(suite: &str, check: &str, eq_ref: Option<&str>, tolerance: f64, reason: &str) -> Self {
        Self {
            suite: suite.into(),
            check: check.into(),
            eq_ref: eq_ref.map(Into::into),
            max_residual: None,
            tolerance,
            status: Status::Skipped,
            asserted: false,
            worst_sample: None,
            reason: Some(reason.into()),
            samples: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub status: Status,
    pub reason: Option<String>,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn new(name: &str, checks: Vec<CheckResult>) -> Self {
        let status = if checks.iter().any(|c| c.status == Status::Fail) {
            Status::Fail
        } else if checks.iter().any(|c| c.status == Status::Pass) {
            Status::Pass
        } else if checks.iter().any(|c| c.status == Status::Report) {
            Status::Report
        } else {
            Status::Skipped
        };
        Self {
            name: name.into(),
            status,
            reason: None,
            checks,
        }
    }

    pub fn skipped(name: &str, reason: &str, checks: Vec<CheckResult>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skipped,
            reason: Some(reason.into()),
            checks,
        }
    }
}

/// Stated value against computed value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Discrepancy {
    pub label: String,
    pub eq_ref: Option<String>,
    pub quantity: String,
    pub claimed: Option<String>,
    /// Largest `|computed - claimed|` over the samples.
    pub max_deviation: Option<f64>,
    pub worst_sample: Option<usize>,
    /// Computed value at the worst sample.
    pub computed: Option<f64>,
    pub note: Option<String>,
}

impl Discrepancy {
    /// Deviation above this is counted as a disagreement.
    pub const THRESHOLD: f64 = 1e-8;

    pub fn disagrees(&self) -> bool {
        self.max_deviation.map_or(true, |d| !(d <= Self::THRESHOLD))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquationSummary {
    pub eq_ref: String,
    pub worst_residual: Option<f64>,
    pub check: String,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coverage {
    pub expected: usize,
    pub present: usize,
    pub missing: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub scenario: String,
    pub seed: u64,
    pub grid: String,
    pub sample_count: usize,
    pub tol_scale: f64,
    pub suites: Vec<String>,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub metadata: Metadata,
    pub samples: Vec<Vec<f64>>,
    pub suites: Vec<SuiteReport>,
    pub summary: Vec<EquationSummary>,
    pub discrepancies: Vec<Discrepancy>,
    pub coverage: Coverage,
}

fn status_rank(s: Status) -> u8 {
    match s {
        Status::Fail => 3,
        Status::Pass => 2,
        Status::Report => 1,
        Status::Skipped => 0,
    }
}

impl VerificationReport {
    pub fn new(metadata: Metadata, samples: Vec<Vec<f64>>, suites: Vec<SuiteReport>, discrepancies: Vec<Discrepancy>) -> Self {
        let summary = summarize(&suites);
        let present: Vec<&str> = summary.iter().map(|s| s.eq_ref.as_str()).collect();
        let missing: Vec<String> = IN_SCOPE
            .iter()
            .filter(|e| !present.contains(e))
            .map(|e| e.to_string())
            .collect();
        let coverage = Coverage {
            expected: IN_SCOPE.len(),
            present: IN_SCOPE.len() - missing.len(),
            missing,
        };
        Self {
            metadata,
            samples,
            suites,
            summary,
            discrepancies,
            coverage,
        }
    }

    pub fn checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.suites.iter().flat_map(|s| s.checks.iter())
    }

    pub fn check(&self, suite: &str, check: &str) -> Option<&CheckResult> {
        self.checks().find(|c| c.suite == suite && c.check == check)
    }

    pub fn failed(&self) -> bool {
        self.checks().any(|c| c.status == Status::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per (check, sample); checks that did not run get one row
    /// with an empty sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,check,eq_ref,sample,value,role,tolerance,status\n");
        let num = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for c in self.checks() {
            let eq = c.eq_ref.clone().unwrap_or_default();
            let status = serde_json::to_value(c.status).expect("status").as_str().unwrap_or("").to_string();
            if c.samples.is_empty() {
                let _ = writeln!(out, "{},{},{},,,,{:e},{}", c.suite, csv_field(&c.check), eq, c.tolerance, status);
            }
            for s in &c.samples {
                let role = serde_json::to_value(&s.role).expect("role").as_str().unwrap_or("").to_string();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{:e},{}",
                    c.suite,
                    csv_field(&c.check),
                    eq,
                    s.sample,
                    num(s.value),
                    role,
                    c.tolerance,
                    status
                );
            }
        }
        out
    }

    /// Plain-text table for terminals.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario {} | seed {} | {} samples | grid {}",
            self.metadata.scenario, self.metadata.seed, self.metadata.sample_count, self.metadata.grid
        );
        for suite in &self.suites {
            let _ = writeln!(out, "[{:?}] {}{}", suite.status, suite.name, suite.reason.as_deref().map(|r| format!(" ({r})")).unwrap_or_default());
        }
        let _ = writeln!(out, "{:<8} {:<12} {:>8} {}", "eq", "worst", "status", "check");
        for s in &self.summary {
            let worst = s.worst_residual.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{:<8} {:<12} {:>8} {}", s.eq_ref, worst, format!("{:?}", s.status), s.check);
        }
        let disagreeing = self.discrepancies.iter().filter(|d| d.disagrees()).count();
        let _ = writeln!(out, "discrepancies: {} logged, {} disagree", self.discrepancies.len(), disagreeing);
        let _ = writeln!(
            out,
            "coverage: {}/{} equation labels{}",
            self.coverage.present,
            self.coverage.expected,
            if self.coverage.missing.is_empty() {
                String::new()
            } else {
                format!(", missing {}", self.coverage.missing.join(" "))
            }
        );
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn eq_order(eq: &str) -> Vec<(u32, String)> {
    eq.split('.')
        .map(|part| {
            let digits: String = part.chars().take_while(char::is_ascii_digit).collect();
            let rest: String = part.chars().skip(digits.len()).collect();
            (digits.parse().unwrap_or(u32::MAX), rest)
        })
        .collect()
}

/// Worst residual per equation label. Failing checks win over passing ones,
/// then larger residuals.
fn summarize(suites: &[SuiteReport]) -> Vec<EquationSummary> {
    let mut by_eq: BTreeMap<Vec<(u32, String)>, EquationSummary> = BTreeMap::new();
    for c in suites.iter().flat_map(|s| &s.checks) {
        let Some(eq) = &c.eq_ref else { continue };
        let candidate = EquationSummary {
            eq_ref: eq.clone(),
            worst_residual: c.max_residual,
            check: c.check.clone(),
            status: c.status,
        };
        by_eq
            .entry(eq_order(eq))
            .and_modify(|cur| {
                let key = |s: &EquationSummary| (status_rank(s.status), s.worst_residual.unwrap_or(0.0));
                let (a, b) = (key(&candidate), key(cur));
                if a.0 > b.0 || (a.0 == b.0 && a.1 > b.1) {
                    *cur = candidate.clone();
                }
            })
            .or_insert(candidate);
    }
    by_eq.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(value: f64, role: Role) -> Measurement {
        Measurement {
            check: "c".into(),
            eq_ref: Some("2.9".into()),
            value: Some(value),
            tolerance: 1e-6,
            role,
            note: None,
        }
    }

    #[test]
    fn aggregation_picks_worst_asserted_sample() {
        let c = CheckResult::aggregate(
            "s",
            vec![(0, m(1e-9, Role::Asserted)), (1, m(5.0, Role::Report)), (2, m(1e-3, Role::Asserted))],
        );
        assert_eq!(c.status, Status::Fail);
        assert_eq!(c.worst_sample, Some(2));
        assert_eq!(c.max_residual, Some(1e-3));
        let c = CheckResult::aggregate("s", vec![(0, m(1e-9, Role::Report)), (1, m(5.0, Role::Report))]);
        assert_eq!(c.status, Status::Report);
        assert_eq!(c.worst_sample, Some(1));
        let nan = CheckResult::aggregate("s", vec![(0, m(f64::NAN, Role::Asserted)), (1, m(0.0, Role::Asserted))]);
        assert_eq!(nan.status, Status::Fail);
        assert_eq!(nan.worst_sample, Some(0));
    }

    #[test]
    fn summary_orders_labels_numerically() {
        let suite = SuiteReport::new(
            "s",
            ["4.10", "4.2", "2.8a", "2.8"]
                .iter()
                .map(|eq| {
                    let mut meas = m(0.0, Role::Asserted);
                    meas.eq_ref = Some(eq.to_string());
                    CheckResult::aggregate("s", vec![(0, meas)])
                })
                .collect(),
        );
        let order: Vec<String> = summarize(&[suite]).into_iter().map(|s| s.eq_ref).collect();
        assert_eq!(order, ["2.8", "2.8a", "4.2", "4.10"]);
    }

    #[test]
    fn csv_quotes_commas() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
