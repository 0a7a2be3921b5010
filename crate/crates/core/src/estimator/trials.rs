use serde::{Deserialize, Serialize};

use super::{EstimateError, McEstimate};
use crate::exec;
use crate::sampling::StreamKey;

/// Statistics over independent trials of one integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub per_trial: Vec<McEstimate>,
    /// Mean of the trial values.
    pub mean: f64,
    /// Sample standard deviation of the trial values, (R-1) divisor.
    pub trial_stddev: f64,
    /// Indices of trials that failed and were left out.
    #[serde(default)]
    pub failed_trials: Vec<usize>,
}

impl TrialSummary {
    /// Builds a summary from successful trials. A single trial gets a
    /// `trial_stddev` of 0.
    pub fn from_estimates(per_trial: Vec<McEstimate>) -> TrialSummary {
        assert!(!per_trial.is_empty());
        let r = per_trial.len();
        let first = per_trial[0].value;
        let (mean, trial_stddev) = if per_trial
            .iter()
            .all(|e| e.value.to_bits() == first.to_bits())
        {
            (first, 0.0)
        } else {
            let mean = per_trial.iter().map(|e| e.value).sum::<f64>() / r as f64;
            let ss = per_trial
                .iter()
                .map(|e| (e.value - mean) * (e.value - mean))
                .sum::<f64>();
            (mean, (ss / (r - 1) as f64).sqrt())
        };
        TrialSummary {
            per_trial,
            mean,
            trial_stddev,
            failed_trials: Vec::new(),
        }
    }

    pub fn trials(&self) -> usize {
        self.per_trial.len()
    }

    /// Mean of the per-trial standard errors.
    pub fn mean_std_error(&self) -> f64 {
        self.per_trial.iter().map(|e| e.std_error).sum::<f64>() / self.per_trial.len() as f64
    }

    pub fn total_nonfinite(&self) -> u64 {
        self.per_trial.iter().map(|e| e.n_nonfinite).sum()
    }

    pub fn any_nonfinite_warning(&self) -> bool {
        self.per_trial.iter().any(McEstimate::nonfinite_warning)
    }

    pub fn any_budget_exhausted(&self) -> bool {
        self.per_trial.iter().any(|e| e.budget_exhausted)
    }
}

/// Runs `run` for trials `0..trials` with keys
/// `StreamKey::new(seed, integrand_index, t)` and summarizes the successes.
///
/// Trials that fail are recorded in `failed_trials`; the call fails if fewer
/// than `min_success` trials succeed (the first error is then returned when
/// nothing succeeded).
pub fn summarize_trials<F>(
    run: F,
    trials: usize,
    seed: u64,
    integrand_index: u64,
    min_success: usize,
) -> Result<TrialSummary, EstimateError>
where
    F: Fn(StreamKey) -> Result<McEstimate, EstimateError> + Sync + Send,
{
    let results = exec::map_indexed(trials, |t| {
        run(StreamKey::new(seed, integrand_index, t as u64))
    });
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    let mut first_err = None;
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => ok.push(e),
            Err(e) => {
                failed.push(t);
                first_err.get_or_insert(e);
            }
        }
    }
    if ok.len() < min_success.max(1) {
        return Err(match first_err {
            Some(e) if ok.is_empty() => e,
            _ => EstimateError::TooFewTrials {
                required: min_success,
                succeeded: ok.len(),
            },
        });
    }
    let mut summary = TrialSummary::from_estimates(ok);
    summary.failed_trials = failed;
    Ok(summary)
}

/// Repeats a single-run recipe `trials >= 2` times with trial indices
/// `0..trials` and returns mean and spread across trials.
pub fn repeated_trials<F>(run: F, trials: usize, seed: u64) -> Result<TrialSummary, EstimateError>
where
    F: Fn(StreamKey) -> Result<McEstimate, EstimateError> + Sync + Send,
{
    if trials < 2 {
        return Err(EstimateError::TooFewTrials {
            required: 2,
            succeeded: trials,
        });
    }
    summarize_trials(run, trials, seed, 0, 2)
}
