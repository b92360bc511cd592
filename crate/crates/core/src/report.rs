//! Pass/fail reports produced by the numerical verifiers.

use std::fmt::Write as _;

use serde::Serialize;

const MAX_WITNESSES: usize = 8;

/// One named property with its worst observed violation.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub max_violation: f64,
    /// Human-readable descriptions of failing samples (at most a handful).
    pub witnesses: Vec<String>,
}

impl Check {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), passed: true, max_violation: 0.0, witnesses: Vec::new() }
    }

    /// Records a measured quantity that stayed within tolerance.
    pub fn observe(&mut self, violation: f64) {
        if violation > self.max_violation || violation.is_nan() {
            self.max_violation = violation;
        }
    }

    pub fn fail(&mut self, violation: f64, witness: String) {
        self.passed = false;
        self.observe(violation);
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness);
        }
    }

    /// Marks the check according to `ok`, with a witness on failure.
    pub fn require(&mut self, ok: bool, violation: f64, witness: impl FnOnce() -> String) {
        if ok {
            self.observe(violation);
        } else {
            self.fail(violation, witness());
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifierReport {
    pub title: String,
    pub checks: Vec<Check>,
    pub max_violation: f64,
    /// Named scalar outputs such as empirical bounds.
    pub metrics: Vec<(String, f64)>,
}

impl VerifierReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), checks: Vec::new(), max_violation: 0.0, metrics: Vec::new() }
    }

    pub fn push(&mut self, check: Check) {
        if check.max_violation > self.max_violation || check.max_violation.is_nan() {
            self.max_violation = check.max_violation;
        }
        self.checks.push(check);
    }

    pub fn set_metric(&mut self, name: impl Into<String>, value: f64) {
        let name = name.into();
        match self.metrics.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = value,
            None => self.metrics.push((name, value)),
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status} {} (max violation {:.3e})", self.title, self.max_violation);
        for (name, v) in &self.metrics {
            let _ = writeln!(out, "  {name} = {v:.6e}");
        }
        for c in &self.checks {
            let s = if c.passed { "ok  " } else { "FAIL" };
            let _ = writeln!(out, "  {s} {} [{:.3e}]", c.name, c.max_violation);
            for w in &c.witnesses {
                let _ = writeln!(out, "       witness: {w}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_check_fails_report() {
        let mut ok = Check::new("a");
        ok.observe(1e-9);
        let mut bad = Check::new("b");
        bad.fail(0.5, "x=1".into());
        let mut r = VerifierReport::new("demo");
        r.push(ok);
        assert!(r.passed());
        r.push(bad);
        assert!(!r.passed());
        assert_eq!(r.max_violation, 0.5);
        let text = r.render();
        assert!(text.starts_with("FAIL demo"));
        assert!(text.contains("witness: x=1"));
    }
}
