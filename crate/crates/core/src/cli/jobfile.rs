//! JSON job files.
//!
//! ```json
//! {
//!   "seed": 0, "trials": 10, "workers": 0,
//!   "integrands": [
//!     {"name": "f", "expr": "abs(x1+x2)", "dim": 2, "low": [0, 0], "high": [1, 1],
//!      "params": {}, "samples": 1000000, "method": "direct"}
//!   ]
//! }
//! ```
//!
//! Unknown fields are rejected. `workers`, `params`, `method` (default
//! `direct`), `method_config` and `analytic` are optional.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::{validate, IntegrandSpec, JobSpec, Method, MethodConfig, ValidationReport};
use crate::sampling::HyperRect;

#[derive(Debug, Error)]
pub enum JobFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed job file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid job:\n{0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    pub seed: u64,
    pub trials: usize,
    #[serde(default)]
    pub workers: usize,
    pub integrands: Vec<IntegrandEntry>,
}

fn default_method() -> Method {
    Method::Direct
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrandEntry {
    pub name: String,
    pub expr: String,
    pub dim: usize,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub samples: u64,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method_config: Option<MethodConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<f64>,
}

impl From<&JobSpec> for JobFile {
    fn from(job: &JobSpec) -> Self {
        JobFile {
            seed: job.seed,
            trials: job.trials,
            workers: job.workers,
            integrands: job
                .integrands
                .iter()
                .map(|s| IntegrandEntry {
                    name: s.name.clone(),
                    expr: s.source.clone(),
                    dim: s.dim,
                    low: s.domain.low().to_vec(),
                    high: s.domain.high().to_vec(),
                    params: s.params.clone(),
                    samples: s.n_samples,
                    method: s.method,
                    method_config: s.method_config.clone(),
                    analytic: s.analytic,
                })
                .collect(),
        }
    }
}

impl JobFile {
    /// Converts to a [`JobSpec`], requiring it to pass validation. All
    /// problems, including bad domains, are reported together.
    pub fn into_job(self) -> Result<JobSpec, ValidationReport> {
        let mut report = ValidationReport::default();
        let integrands = self
            .integrands
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let domain = HyperRect::new(e.low.clone(), e.high.clone()).unwrap_or_else(|err| {
                    report.push(&e.name, i, format!("bad domain: {err}"));
                    // placeholder so the remaining checks still run
                    HyperRect::unit(e.dim.max(1))
                });
                IntegrandSpec {
                    name: e.name,
                    source: e.expr,
                    dim: e.dim,
                    domain,
                    params: e.params,
                    n_samples: e.samples,
                    method: e.method,
                    method_config: e.method_config,
                    analytic: e.analytic,
                }
            })
            .collect();
        let job = JobSpec {
            seed: self.seed,
            trials: self.trials,
            workers: self.workers,
            integrands,
        };
        report.extend(validate(&job));
        if report.is_empty() {
            Ok(job)
        } else {
            Err(report)
        }
    }
}

pub fn parse_job(text: &str) -> Result<JobSpec, JobFileError> {
    let file: JobFile = serde_json::from_str(text)?;
    file.into_job().map_err(JobFileError::Invalid)
}

pub fn load_job(path: &Path) -> Result<JobSpec, JobFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| JobFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_job(&text)
}

pub fn job_to_json(job: &JobSpec) -> String {
    serde_json::to_string_pretty(&JobFile::from(job)).expect("job serializes")
}

pub fn write_job(job: &JobSpec, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, job_to_json(job) + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"{
        "seed": 3, "trials": 2,
        "integrands": [
            {"name": "a", "expr": "k*x1", "dim": 1, "low": [0], "high": [2],
             "params": {"k": 1.5}, "samples": 100},
            {"name": "b", "expr": "x1*x2", "dim": 2, "low": [0, 0], "high": [1, 1],
             "samples": 1000, "method": "tree", "method_config": {"max_depth": 2}}
        ]
    }"#;

    #[test]
    fn parse_valid() {
        let job = parse_job(VALID).unwrap();
        assert_eq!(job.workers, 0);
        assert_eq!(job.integrands[0].method, Method::Direct);
        assert_eq!(job.integrands[0].params["k"], 1.5);
        assert_eq!(job.integrands[1].method, Method::Tree);
        assert_eq!(
            job.integrands[1].method_config.as_ref().unwrap().max_depth,
            Some(2)
        );
        assert_eq!(parse_job(&job_to_json(&job)).unwrap(), job);
    }

    #[test]
    fn unknown_fields_rejected() {
        let top = VALID.replacen("\"trials\": 2", "\"trials\": 2, \"extra\": 1", 1);
        assert!(matches!(parse_job(&top), Err(JobFileError::Json(_))));
        let inner = VALID.replacen(
            "\"samples\": 100}",
            "\"samples\": 100, \"colour\": \"red\"}",
            1,
        );
        assert!(matches!(parse_job(&inner), Err(JobFileError::Json(_))));
        let cfg = VALID.replacen("\"max_depth\": 2", "\"depth\": 2", 1);
        assert!(matches!(parse_job(&cfg), Err(JobFileError::Json(_))));
        let method = VALID.replacen("\"tree\"", "\"vegas\"", 1);
        assert!(matches!(parse_job(&method), Err(JobFileError::Json(_))));
    }

    #[test]
    fn domain_and_validation_errors_collected() {
        let bad = VALID
            .replacen("\"high\": [2]", "\"high\": [0]", 1)
            .replacen("\"x1*x2\"", "\"x1*x3\"", 1);
        let Err(JobFileError::Invalid(report)) = parse_job(&bad) else {
            panic!()
        };
        let text = report.to_string();
        assert!(
            text.contains("`a`") && text.contains("bad domain"),
            "{text}"
        );
        assert!(
            text.contains("`b`") && text.contains("x3 exceeds dim=2"),
            "{text}"
        );
    }
}
