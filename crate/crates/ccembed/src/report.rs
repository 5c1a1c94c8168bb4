//! Verification report: one record per stage, every number with its bound.

use std::fmt::{self, Write as _};
use std::time::{SystemTime, UNIX_EPOCH};

/// The condition a measured value must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Above(f64),
    Below(f64),
    Within { target: f64, tol: f64 },
}

impl Bound {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost(b) => v <= b,
            Bound::AtLeast(b) => v >= b,
            Bound::Above(b) => v > b,
            Bound::Below(b) => v < b,
            Bound::Within { target, tol } => (v - target).abs() <= tol,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(b) => write!(f, "<= {b:e}"),
            Bound::AtLeast(b) => write!(f, ">= {b:e}"),
            Bound::Above(b) => write!(f, "> {b:e}"),
            Bound::Below(b) => write!(f, "< {b:e}"),
            Bound::Within { target, tol } => write!(f, "= {target:e} +- {tol:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
}

impl Measurement {
    pub fn passed(&self) -> bool {
        self.bound.holds(self.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub name: &'static str,
    pub measurements: Vec<Measurement>,
    /// Free-form notes, e.g. the offending node of a failed check.
    pub notes: Vec<String>,
    /// Set when the stage aborted with an error.
    pub error: Option<String>,
}

impl StageRecord {
    pub fn new(name: &'static str) -> StageRecord {
        StageRecord { name, measurements: Vec::new(), notes: Vec::new(), error: None }
    }

    pub fn measure(&mut self, name: impl Into<String>, value: f64, bound: Bound) -> bool {
        let m = Measurement { name: name.into(), value, bound };
        let ok = m.passed();
        self.measurements.push(m);
        ok
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.measurements.iter().all(Measurement::passed)
    }

    pub fn get(&self, name: &str) -> Option<&Measurement> {
        self.measurements.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    HypothesisViolation,
    NotConverged,
}

impl Verdict {
    /// 0 pass, 1 other failure, 2 hypothesis violation, 3 optimizer non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::HypothesisViolation => 2,
            Verdict::NotConverged => 3,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::HypothesisViolation => "hypothesis-violation",
            Verdict::NotConverged => "not-converged",
        }
    }
}

/// Exit code for configuration errors.
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub title: String,
    pub stages: Vec<StageRecord>,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// The report without its timestamp line; deterministic for a fixed config.
    pub fn body(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "title = {}", self.title);
        for s in &self.stages {
            let _ = writeln!(out, "[{}] {}", s.name, if s.passed() { "pass" } else { "fail" });
            for m in &s.measurements {
                let mark = if m.passed() { "ok" } else { "FAIL" };
                let _ = writeln!(out, "  {:<28} {:>22.12e}  {:<28} {mark}", m.name, m.value, m.bound.to_string());
            }
            for n in &s.notes {
                let _ = writeln!(out, "  note: {n}");
            }
            if let Some(e) = &s.error {
                let _ = writeln!(out, "  error: {e}");
            }
        }
        let _ = writeln!(out, "verdict = {}", self.verdict.label());
        out
    }

    /// Timestamp header line followed by [`Self::body`].
    pub fn render(&self) -> String {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("# ccembed report, unix time {secs}\n{}", self.body())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_and_rendering() {
        let mut s = StageRecord::new("demo");
        assert!(s.measure("a", 1e-4, Bound::AtMost(1e-3)));
        assert!(!s.measure("b", -1.0, Bound::Above(-1.0)));
        assert!(Bound::Within { target: -0.25, tol: 2e-3 }.holds(-0.251));
        let r = VerificationReport { title: "t".into(), stages: vec![s], verdict: Verdict::Fail };
        let text = r.render();
        assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 1);
        assert!(text.ends_with(&r.body()));
        assert!(r.body().contains("FAIL"));
        assert_eq!(Verdict::HypothesisViolation.exit_code(), 2);
    }
}
