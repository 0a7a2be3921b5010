//! Monte Carlo estimators.
//!
//! All estimators reduce per-chunk and per-cell partial results in ascending
//! index order, so a given key always produces the same bits no matter how
//! many worker threads took part.

mod direct;
mod moments;
mod stratified;
mod tree;
mod trials;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use direct::direct_mc;
pub use moments::Moments;
pub use stratified::{stratified_mc, StratifiedOutcome, DEFAULT_CELL_CAP};
pub use tree::{tree_refine, RefineConfig, RefineOutcome, StopReason, StratumNode};
pub use trials::{repeated_trials, summarize_trials, TrialSummary};

use crate::expr::CompiledProgram;
use crate::sampling::HyperRect;

/// Fraction of non-finite evaluations above which an estimate is flagged.
pub const NONFINITE_WARN_FRACTION: f64 = 0.01;

/// Result of one estimation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Evaluations attempted, including discarded non-finite ones.
    pub n_samples: u64,
    pub n_nonfinite: u64,
    /// Set by [`tree_refine`] when it stopped because the budget ran out.
    #[serde(default)]
    pub budget_exhausted: bool,
}

impl McEstimate {
    pub fn nonfinite_warning(&self) -> bool {
        self.n_nonfinite as f64 > NONFINITE_WARN_FRACTION * self.n_samples as f64
    }

    /// Estimate for a region of `volume` from the finite-sample moments.
    pub(crate) fn from_moments(volume: f64, m: &Moments, n_nonfinite: u64) -> McEstimate {
        McEstimate {
            value: volume * m.mean,
            std_error: volume * m.mean_variance().sqrt(),
            n_samples: m.n + n_nonfinite,
            n_nonfinite,
            budget_exhausted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("program expects {program} dimensions but the domain has {domain}")]
    DimensionMismatch { program: usize, domain: usize },
    #[error("program expects {expected} parameters, got {found}")]
    ParameterCount { expected: usize, found: usize },
    #[error("at least 2 samples required, got {0}")]
    TooFewSamples(u64),
    #[error("all {0} evaluations were non-finite")]
    AllSamplesNonFinite(u64),
    #[error("only {finite} of {total} evaluations were finite; need at least 2")]
    InsufficientFiniteSamples { finite: u64, total: u64 },
    #[error("{cells} cells exceed the cap of {cap}")]
    CellBudgetExceeded { cells: u128, cap: u64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("at least {required} successful trials required, got {succeeded}")]
    TooFewTrials { required: usize, succeeded: usize },
}

pub(crate) fn check_inputs(
    program: &CompiledProgram,
    params: &[f64],
    rect: &HyperRect,
) -> Result<(), EstimateError> {
    if program.dim() != rect.dim() {
        return Err(EstimateError::DimensionMismatch {
            program: program.dim(),
            domain: rect.dim(),
        });
    }
    if program.param_names().len() != params.len() {
        return Err(EstimateError::ParameterCount {
            expected: program.param_names().len(),
            found: params.len(),
        });
    }
    Ok(())
}

pub(crate) fn require_finite(m: &Moments, nonfinite: u64) -> Result<(), EstimateError> {
    match m.n {
        0 => Err(EstimateError::AllSamplesNonFinite(nonfinite)),
        1 => Err(EstimateError::InsufficientFiniteSamples {
            finite: 1,
            total: 1 + nonfinite,
        }),
        _ => Ok(()),
    }
}

/// Sum of estimates over disjoint regions, in the order given.
pub(crate) fn sum_estimates<'a>(parts: impl IntoIterator<Item = &'a McEstimate>) -> McEstimate {
    let mut value = 0.0;
    let mut var = 0.0;
    let mut n = 0;
    let mut nonfinite = 0;
    for p in parts {
        value += p.value;
        var += p.std_error * p.std_error;
        n += p.n_samples;
        nonfinite += p.n_nonfinite;
    }
    McEstimate {
        value,
        std_error: var.sqrt(),
        n_samples: n,
        n_nonfinite: nonfinite,
        budget_exhausted: false,
    }
}
