//! Heterogeneous batches of integrals.
//!
//! A [`JobSpec`] lists integrands that may differ in expression, dimension,
//! domain, budget and method. [`run_batch`] validates the whole job up front,
//! then evaluates every (integrand, trial, chunk) unit on a shared worker
//! pool. Stream keys depend only on the seed, the integrand's list position
//! and the trial, so results do not depend on the worker count.

mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{
    direct_mc, stratified_mc, summarize_trials, tree_refine, EstimateError, McEstimate,
    RefineConfig, TrialSummary,
};
use crate::exec;
use crate::expr::{compile, parse, CompiledProgram};
use crate::sampling::{HyperRect, StreamKey};

pub use validate::{validate, ValidationReport, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Stratified,
    Tree,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Stratified => "stratified",
            Method::Tree => "tree",
        })
    }
}

/// Optional overrides for stratified and tree integration. Unset fields are
/// derived from the integrand's dimension and sample budget.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells_per_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_cell: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_multiplier: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

/// One integral of a job.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandSpec {
    pub name: String,
    pub source: String,
    pub dim: usize,
    pub domain: HyperRect,
    pub params: BTreeMap<String, f64>,
    pub n_samples: u64,
    pub method: Method,
    pub method_config: Option<MethodConfig>,
    /// Known reference value, carried through to the results.
    pub analytic: Option<f64>,
}

impl IntegrandSpec {
    /// Direct Monte Carlo integrand with no parameters.
    pub fn direct(
        name: impl Into<String>,
        source: impl Into<String>,
        domain: HyperRect,
        n_samples: u64,
    ) -> Self {
        IntegrandSpec {
            name: name.into(),
            source: source.into(),
            dim: domain.dim(),
            domain,
            params: BTreeMap::new(),
            n_samples,
            method: Method::Direct,
            method_config: None,
            analytic: None,
        }
    }

    pub fn with_param(mut self, name: impl Into<String>, value: f64) -> Self {
        self.params.insert(name.into(), value);
        self
    }

    pub fn with_method(mut self, method: Method, config: Option<MethodConfig>) -> Self {
        self.method = method;
        self.method_config = config;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub seed: u64,
    pub trials: usize,
    /// Worker threads; 0 = all hardware threads.
    pub workers: usize,
    pub integrands: Vec<IntegrandSpec>,
}

/// Resolved sampling plan for one integrand.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Direct {
        n_samples: u64,
    },
    Stratified {
        cells_per_dim: usize,
        samples_per_cell: u64,
    },
    Tree(RefineConfig),
}

/// A spec compiled and ready to run.
#[derive(Debug, Clone)]
pub struct PreparedIntegrand {
    pub program: CompiledProgram,
    pub params: Vec<f64>,
    pub domain: HyperRect,
    pub plan: Plan,
}

impl PreparedIntegrand {
    /// Parses, compiles and resolves the method of `spec`, returning every
    /// problem found.
    pub fn new(spec: &IntegrandSpec) -> Result<Self, Vec<String>> {
        let mut problems = Vec::new();
        if spec.dim != spec.domain.dim() {
            problems.push(format!(
                "dim={} but the domain has {} dimensions",
                spec.dim,
                spec.domain.dim()
            ));
        }
        if spec.n_samples < 2 {
            problems.push(format!(
                "samples must be at least 2 (got {})",
                spec.n_samples
            ));
        }
        for (name, value) in &spec.params {
            if !value.is_finite() {
                problems.push(format!("parameter `{name}` is not finite ({value})"));
            }
        }
        let program = match parse(&spec.source) {
            Err(e) => {
                problems.push(format!("parse error: {e}"));
                None
            }
            Ok(expr) => {
                if let Some(&max) = expr.free_variables().iter().next_back() {
                    if max >= spec.dim {
                        problems.push(format!("x{} exceeds dim={}", max + 1, spec.dim));
                    }
                }
                for name in expr.parameters() {
                    if !spec.params.contains_key(&name) {
                        problems.push(format!("unbound parameter `{name}`"));
                    }
                }
                let names: Vec<&String> = spec.params.keys().collect();
                compile(&expr, spec.dim.max(1), &names).ok()
            }
        };
        let plan = resolve_plan(spec).map_err(|e| problems.push(e)).ok();
        match (program, plan) {
            (Some(program), Some(plan)) if problems.is_empty() => Ok(PreparedIntegrand {
                program,
                params: spec.params.values().copied().collect(),
                domain: spec.domain.clone(),
                plan,
            }),
            _ => Err(problems),
        }
    }

    /// One trial with stream root `key`.
    pub fn run(&self, key: StreamKey) -> Result<McEstimate, EstimateError> {
        let (p, x, r) = (&self.program, &self.params, &self.domain);
        match &self.plan {
            Plan::Direct { n_samples } => direct_mc(p, x, r, *n_samples, key),
            Plan::Stratified {
                cells_per_dim,
                samples_per_cell,
            } => stratified_mc(p, x, r, *cells_per_dim, *samples_per_cell, key).map(|o| o.estimate),
            Plan::Tree(config) => tree_refine(p, x, r, config, key).map(|o| o.estimate),
        }
    }
}

fn resolve_plan(spec: &IntegrandSpec) -> Result<Plan, String> {
    let dim = spec.dim.max(1);
    let cfg = spec.method_config.clone().unwrap_or_default();
    let budget = cfg.budget.unwrap_or(spec.n_samples);
    let cells = |k: usize| -> Result<u64, String> {
        if k == 0 {
            return Err("cells_per_dim must be at least 1".into());
        }
        match (k as u64).checked_pow(dim as u32) {
            Some(c) if c <= crate::estimator::DEFAULT_CELL_CAP => Ok(c),
            _ => Err(format!(
                "{k}^{dim} cells exceed the cap of {}",
                crate::estimator::DEFAULT_CELL_CAP
            )),
        }
    };
    match spec.method {
        Method::Direct => Ok(Plan::Direct {
            n_samples: spec.n_samples,
        }),
        Method::Stratified => {
            let auto = RefineConfig::stratified_for_budget(dim, budget);
            let k = cfg.cells_per_dim.unwrap_or(auto.cells_per_dim);
            let n_cells = cells(k)?;
            let spc = cfg.samples_per_cell.unwrap_or((budget / n_cells).max(2));
            if spc < 2 {
                return Err("samples_per_cell must be at least 2".into());
            }
            Ok(Plan::Stratified {
                cells_per_dim: k,
                samples_per_cell: spc,
            })
        }
        Method::Tree => {
            let auto = RefineConfig::for_budget(dim, budget);
            let config = RefineConfig {
                cells_per_dim: cfg.cells_per_dim.unwrap_or(auto.cells_per_dim),
                samples_per_cell: cfg.samples_per_cell.unwrap_or(auto.samples_per_cell),
                max_depth: cfg.max_depth.unwrap_or(auto.max_depth),
                sigma_multiplier: cfg.sigma_multiplier.unwrap_or(auto.sigma_multiplier),
                budget,
            };
            let initial = cells(config.cells_per_dim)? * config.samples_per_cell;
            if config.samples_per_cell < 2 {
                return Err("samples_per_cell must be at least 2".into());
            }
            if !(config.sigma_multiplier >= 0.0) {
                return Err("sigma_multiplier must be >= 0".into());
            }
            if initial > config.budget {
                return Err(format!(
                    "initial pass needs {initial} samples but the budget is {}",
                    config.budget
                ));
            }
            Ok(Plan::Tree(config))
        }
    }
}

/// Results for one integrand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrandResult {
    pub name: String,
    /// Position in the job; also the stream key's integrand index.
    pub index: usize,
    pub dim: usize,
    pub method: Method,
    pub n_samples: u64,
    pub trials: usize,
    pub analytic: Option<f64>,
    pub summary: Option<TrialSummary>,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    /// Summed wall time of this integrand's trials.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub entries: Vec<IntegrandResult>,
    pub wall_seconds: f64,
}

impl BatchResult {
    /// Copy with all timings zeroed, for comparing numeric content.
    pub fn without_timings(&self) -> BatchResult {
        BatchResult {
            entries: self
                .entries
                .iter()
                .map(|e| IntegrandResult {
                    wall_seconds: 0.0,
                    ..e.clone()
                })
                .collect(),
            wall_seconds: 0.0,
        }
    }

    pub fn get(&self, name: &str) -> Option<&IntegrandResult> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failed(&self) -> usize {
        self.entries.iter().filter(|e| e.summary.is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BatchError {
    #[error("job is invalid:\n{0}")]
    Validation(ValidationReport),
    #[error("parameter `{0}` is not bound in the template")]
    UnknownScanParameter(String),
    #[error("parameter scan needs at least one value")]
    EmptyScan,
    #[error("integrand `{name}` failed: {error}")]
    IntegrandFailed { name: String, error: String },
}

fn warnings_for(summary: &TrialSummary) -> Vec<String> {
    let mut w = Vec::new();
    if summary.any_nonfinite_warning() {
        w.push(format!("nonfinite:{}", summary.total_nonfinite()));
    }
    if summary.any_budget_exhausted() {
        w.push("budget_exhausted".into());
    }
    if !summary.failed_trials.is_empty() {
        let ids: Vec<String> = summary
            .failed_trials
            .iter()
            .map(|t| t.to_string())
            .collect();
        w.push(format!("failed_trials:{}", ids.join("|")));
    }
    if summary.trials() == 1 {
        w.push("single_trial".into());
    }
    w
}

/// Validates and runs every integrand of `job` for `job.trials` trials.
///
/// Failures of individual integrands are recorded in their entry and do not
/// stop the rest of the batch.
pub fn run_batch(job: &JobSpec) -> Result<BatchResult, BatchError> {
    let report = validate(job);
    if !report.is_empty() {
        return Err(BatchError::Validation(report));
    }
    let prepared: Vec<PreparedIntegrand> = job
        .integrands
        .iter()
        .map(|s| PreparedIntegrand::new(s).expect("validated"))
        .collect();

    let start = Instant::now();
    let outcomes = exec::with_workers(job.workers, || {
        exec::map_indexed(prepared.len(), |i| {
            let t0 = Instant::now();
            let outcome = summarize_trials(
                |key| prepared[i].run(key),
                job.trials,
                job.seed,
                i as u64,
                job.trials.min(2),
            );
            let secs = t0.elapsed().as_secs_f64();
            log::info!(
                "integrand {i} ({}) done in {secs:.3}s",
                job.integrands[i].name
            );
            (outcome, secs)
        })
    });
    let wall_seconds = start.elapsed().as_secs_f64();

    let entries = job
        .integrands
        .iter()
        .zip(outcomes)
        .enumerate()
        .map(|(index, (spec, (outcome, secs)))| {
            let (summary, error, warnings) = match outcome {
                Ok(s) => {
                    let w = warnings_for(&s);
                    (Some(s), None, w)
                }
                Err(e) => (None, Some(e.to_string()), vec![format!("error:{e}")]),
            };
            IntegrandResult {
                name: spec.name.clone(),
                index,
                dim: spec.dim,
                method: spec.method,
                n_samples: spec.n_samples,
                trials: job.trials,
                analytic: spec.analytic,
                summary,
                error,
                warnings,
                wall_seconds: secs,
            }
        })
        .collect();
    Ok(BatchResult {
        entries,
        wall_seconds,
    })
}

/// Job with one copy of `template` per value of `param_name`; copy `i` is
/// named `{template}[{i}]` and sits at list position `i`.
pub fn expand_scan(
    template: &IntegrandSpec,
    param_name: &str,
    values: &[f64],
    trials: usize,
    seed: u64,
) -> Result<JobSpec, BatchError> {
    if !template.params.contains_key(param_name) {
        return Err(BatchError::UnknownScanParameter(param_name.to_string()));
    }
    if values.is_empty() {
        return Err(BatchError::EmptyScan);
    }
    let integrands = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut spec = template.clone();
            spec.name = format!("{}[{i}]", template.name);
            spec.params.insert(param_name.to_string(), v);
            spec
        })
        .collect();
    Ok(JobSpec {
        seed,
        trials,
        workers: 0,
        integrands,
    })
}

/// Runs `template` once per parameter value; equivalent to [`run_batch`] on
/// [`expand_scan`]'s job.
pub fn parameter_scan(
    template: &IntegrandSpec,
    param_name: &str,
    values: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialSummary>, BatchError> {
    let job = expand_scan(template, param_name, values, trials, seed)?;
    let result = run_batch(&job)?;
    result
        .entries
        .into_iter()
        .map(|e| match e.summary {
            Some(s) => Ok(s),
            None => Err(BatchError::IntegrandFailed {
                name: e.name,
                error: e.error.unwrap_or_default(),
            }),
        })
        .collect()
}
