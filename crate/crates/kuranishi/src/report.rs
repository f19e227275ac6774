//! Structured pass/fail reports. Checkers append one item per verified
//! condition, keyed by a stable condition label so callers (and tests) can
//! ask exactly which condition failed.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub condition: String,
    pub passed: bool,
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn new() -> Self {
        CheckReport { items: Vec::new() }
    }

    pub fn push(&mut self, condition: impl Into<String>, passed: bool, residual: f64, detail: impl Into<String>) {
        self.items.push(CheckItem {
            condition: condition.into(),
            passed,
            residual,
            detail: detail.into(),
        });
    }

    pub fn pass(&mut self, condition: impl Into<String>, residual: f64) {
        self.push(condition, true, residual, "");
    }

    pub fn fail(&mut self, condition: impl Into<String>, residual: f64, detail: impl Into<String>) {
        self.push(condition, false, residual, detail);
    }

    /// Records a residual measured against a tolerance.
    pub fn check(&mut self, condition: impl Into<String>, residual: f64, tolerance: f64, detail: impl Into<String>) {
        let ok = residual <= tolerance;
        let d: String = detail.into();
        let msg = if ok {
            d
        } else if d.is_empty() {
            format!("residual {residual:.3e} exceeds {tolerance:.1e}")
        } else {
            format!("{d}: residual {residual:.3e} exceeds {tolerance:.1e}")
        };
        self.push(condition, ok, residual, msg);
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.items.extend(other.items);
    }

    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failed_conditions(&self) -> Vec<&str> {
        self.items
            .iter()
            .filter(|i| !i.passed)
            .map(|i| i.condition.as_str())
            .collect()
    }

    /// True when some failing item's condition label starts with `prefix`.
    pub fn failed_under(&self, prefix: &str) -> bool {
        self.failed_conditions().iter().any(|c| c.starts_with(prefix))
    }
}
