//! Per-sample measurements and the tolerances they are judged against.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("tolerance `{name}` must be positive and finite, got {value}")]
pub struct ToleranceError {
    pub name: &'static str,
    pub value: f64,
}

/// Tolerance table. Every entry can be overridden per scenario and the whole
/// table can be scaled from the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Structure tensor identities of the ambient space.
    pub axioms: f64,
    /// Slant relations on a single distribution.
    pub slant: f64,
    /// Agreement between the two slant-angle computations.
    pub agreement: f64,
    /// Projector and frame algebra.
    pub projector: f64,
    /// Symmetry of `h`, shape-operator duality, Weingarten, brackets.
    pub geometry: f64,
    /// Identities that are algebraic in `h`, `A`, `P`, `Q`.
    pub algebraic: f64,
    /// Identities involving a derivative of a slant function.
    pub derivative: f64,
    /// Warped metric fit.
    pub fit: f64,
    /// Orthonormality of the adapted frame and block re-sums.
    pub frame: f64,
    /// Mixed `h` mass below which the mixed totally geodesic hypothesis holds.
    pub hypothesis: f64,
    /// Branch conditions asserted under the hypothesis.
    pub branch: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            axioms: 1e-8,
            slant: 1e-8,
            agreement: 1e-7,
            projector: 1e-10,
            geometry: 1e-6,
            algebraic: 1e-6,
            derivative: 1e-5,
            fit: 1e-8,
            frame: 1e-8,
            hypothesis: 1e-8,
            branch: 1e-6,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 11] {
        [
            ("axioms", self.axioms),
            ("slant", self.slant),
            ("agreement", self.agreement),
            ("projector", self.projector),
            ("geometry", self.geometry),
            ("algebraic", self.algebraic),
            ("derivative", self.derivative),
            ("fit", self.fit),
            ("frame", self.frame),
            ("hypothesis", self.hypothesis),
            ("branch", self.branch),
        ]
    }

    pub fn validate(&self) -> Result<(), ToleranceError> {
        for (name, value) in self.entries() {
            if !(value.is_finite() && value > 0.0) {
                return Err(ToleranceError { name, value });
            }
        }
        Ok(())
    }

    /// Every tolerance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            axioms: self.axioms * factor,
            slant: self.slant * factor,
            agreement: self.agreement * factor,
            projector: self.projector * factor,
            geometry: self.geometry * factor,
            algebraic: self.algebraic * factor,
            derivative: self.derivative * factor,
            fit: self.fit * factor,
            frame: self.frame * factor,
            hypothesis: self.hypothesis * factor,
            branch: self.branch * factor,
        }
    }
}

/// How a measurement takes part in the verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Fails the run when the value exceeds the tolerance.
    Asserted,
    /// Recorded only.
    Report,
    /// Not evaluated at this sample.
    Skipped,
}

/// One named quantity evaluated at one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub check: String,
    pub eq_ref: Option<String>,
    /// Residual (for asserted checks) or the reported quantity.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub role: Role,
    pub note: Option<String>,
}

impl Measurement {
    pub fn asserted(check: &str, eq_ref: Option<&str>, value: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            eq_ref: eq_ref.map(Into::into),
            value: Some(value),
            tolerance,
            role: Role::Asserted,
            note: None,
        }
    }

    pub fn report(check: &str, eq_ref: Option<&str>, value: f64, tolerance: f64) -> Self {
        Self {
            role: Role::Report,
            ..Self::asserted(check, eq_ref, value, tolerance)
        }
    }

    pub fn skipped(check: &str, eq_ref: Option<&str>, tolerance: f64, reason: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            eq_ref: eq_ref.map(Into::into),
            value: None,
            tolerance,
            role: Role::Skipped,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Asserted when `assert` holds, report-only otherwise.
    pub fn gated(check: &str, eq_ref: Option<&str>, value: f64, tolerance: f64, assert: bool) -> Self {
        if assert {
            Self::asserted(check, eq_ref, value, tolerance)
        } else {
            Self::report(check, eq_ref, value, tolerance)
        }
    }

    /// Within tolerance; a missing or non-finite value never passes.
    pub fn within_tolerance(&self) -> bool {
        matches!(self.value, Some(v) if v.is_finite() && v <= self.tolerance)
    }
}

/// Running maximum of `|value|`.
pub fn max_abs<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(0.0, |acc: f64, v| {
        if acc.is_nan() || v.is_nan() {
            f64::NAN
        } else {
            acc.max(v.abs())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_scale() {
        let t = Tolerances::default();
        t.validate().unwrap();
        let s = t.scaled(10.0);
        assert!((s.axioms - 1e-7).abs() < 1e-20);
        assert!((s.derivative - 1e-4).abs() < 1e-18);
        let bad = Tolerances {
            fit: -1.0,
            ..Tolerances::default()
        };
        assert_eq!(bad.validate().unwrap_err().name, "fit");
    }

    #[test]
    fn nan_never_passes() {
        let m = Measurement::asserted("x", None, f64::NAN, 1.0);
        assert!(!m.within_tolerance());
        assert!(max_abs([1.0, f64::NAN, 0.5]).is_nan());
        assert!(max_abs([f64::NAN, 2.0]).is_nan());
        assert_eq!(max_abs([-3.0, 2.0]), 3.0);
    }
}
