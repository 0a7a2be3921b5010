use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{JobSpec, PreparedIntegrand};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Integrand name, or `None` for job-level problems.
    pub integrand: Option<String>,
    pub index: Option<usize>,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.integrand, self.index) {
            (Some(name), Some(i)) => write!(f, "integrand `{name}` (#{i}): {}", self.reason),
            (Some(name), None) => write!(f, "integrand `{name}`: {}", self.reason),
            (None, _) => write!(f, "job: {}", self.reason),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push_job(&mut self, reason: impl Into<String>) {
        self.violations.push(Violation {
            integrand: None,
            index: None,
            reason: reason.into(),
        });
    }

    pub fn push(&mut self, name: &str, index: usize, reason: impl Into<String>) {
        self.violations.push(Violation {
            integrand: Some(name.to_string()),
            index: Some(index),
            reason: reason.into(),
        });
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Every reason `job` cannot run; empty iff [`super::run_batch`] will accept it.
pub fn validate(job: &JobSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    if job.trials == 0 {
        report.push_job("trials must be at least 1");
    }
    if job.integrands.is_empty() {
        report.push_job("job has no integrands");
    }
    let mut first_seen: HashMap<&str, usize> = HashMap::new();
    for (i, spec) in job.integrands.iter().enumerate() {
        if spec.name.is_empty() {
            report.push(&spec.name, i, "name is empty");
        }
        if let Some(prev) = first_seen.insert(&spec.name, i) {
            first_seen.insert(&spec.name, prev);
            report.push(
                &spec.name,
                i,
                format!("duplicate name (first used by #{prev})"),
            );
        }
        if let Err(problems) = PreparedIntegrand::new(spec) {
            for p in problems {
                report.push(&spec.name, i, p);
            }
        }
    }
    report
}
