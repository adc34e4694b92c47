use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::CliError;

/// One pass/fail check: `value ≤ tolerance`.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: String,
    /// Anchor of the statement the check exercises.
    pub anchor: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(id: &str, anchor: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Check {
            id: id.into(),
            anchor: anchor.into(),
            value,
            tolerance,
            // NaN fails.
            passed: value <= tolerance,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub resolution: usize,
    pub weight_exponent_convention: String,
    pub checks: Vec<Check>,
    pub data: Value,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig, mut checks: Vec<Check>, data: Value) -> Self {
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        let passed = checks.iter().all(|c| c.passed);
        Report {
            command: command.into(),
            config: config.clone(),
            resolution: config.resolution(),
            weight_exponent_convention: config.convention.tag().into(),
            checks,
            data,
            passed,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write_text(&dir.join(format!("{}.json", self.command)), &to_pretty(self)?)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {:<28} {:<16} value={:.3e} tol={:.1e}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.id,
                c.anchor,
                c.value,
                c.tolerance
            ));
        }
        s
    }
}

pub fn to_pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_text(path, &to_pretty(value)?)
}
