//! Harmonic benchmark family: `f_n(x) = a cos(k_n · Σx) + b sin(k_n · Σx)`
//! on `[0,1]^4` with `k_n = (n + 50) / 2π` and `a = b = 1`, plus its closed
//! form and a checker for results tables.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use crate::batch::{IntegrandSpec, JobSpec, Method};
use crate::cli::results::{format_f64, ResultsError, ResultsTable};
use crate::sampling::HyperRect;

pub const HARMONIC_DIM: usize = 4;
pub const HARMONIC_EXPR: &str = "a*cos(k*(x1+x2+x3+x4)) + b*sin(k*(x1+x2+x3+x4))";
pub const NAME_PREFIX: &str = "harmonic_";

/// Scalar wavenumber of the `n`-th integrand.
pub fn wavenumber(n: usize) -> f64 {
    (n as f64 + 50.0) / (2.0 * PI)
}

/// `∫_{[0,1]^d} cos(k Σx) + sin(k Σx) dx = Re φ^d + Im φ^d` with
/// `φ = (e^{ik} - 1)/(ik) = sin(k)/k + i (1 - cos k)/k`.
pub fn harmonic_cube_integral(k: f64, dim: usize) -> f64 {
    let (re, im) = if k.abs() < 1e-8 {
        // series of sin(k)/k and 2 sin²(k/2)/k
        (1.0 - k * k / 6.0, k / 2.0)
    } else {
        let half = (0.5 * k).sin();
        (k.sin() / k, 2.0 * half * half / k)
    };
    let (mut pr, mut pi) = (1.0, 0.0);
    for _ in 0..dim {
        (pr, pi) = (pr * re - pi * im, pr * im + pi * re);
    }
    pr + pi
}

/// Closed-form value of the `n`-th harmonic integral.
pub fn analytic_harmonic(n: usize) -> f64 {
    harmonic_cube_integral(wavenumber(n), HARMONIC_DIM)
}

/// The `n_count`-integrand harmonic job.
pub fn gen_fig1(n_count: usize, samples: u64, trials: usize, seed: u64) -> JobSpec {
    let integrands = (1..=n_count)
        .map(|n| IntegrandSpec {
            name: format!("{NAME_PREFIX}{n}"),
            source: HARMONIC_EXPR.to_string(),
            dim: HARMONIC_DIM,
            domain: HyperRect::unit(HARMONIC_DIM),
            params: BTreeMap::from([
                ("a".to_string(), 1.0),
                ("b".to_string(), 1.0),
                ("k".to_string(), wavenumber(n)),
            ]),
            n_samples: samples,
            method: Method::Direct,
            method_config: None,
            analytic: Some(analytic_harmonic(n)),
        })
        .collect();
    JobSpec {
        seed,
        trials,
        workers: 0,
        integrands,
    }
}

/// Integrand number from a name like `harmonic_17`.
pub fn index_from_name(name: &str) -> Option<usize> {
    let digits = name.strip_prefix(NAME_PREFIX)?;
    digits.parse().ok().filter(|&n| n >= 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Row {
    pub name: String,
    pub n: usize,
    pub mean: Option<f64>,
    pub trial_stddev: Option<f64>,
    pub mean_std_error: Option<f64>,
    pub analytic: f64,
    /// `4 * max(trial_stddev, mean_std_error)`
    pub band: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Report {
    pub rows: Vec<Fig1Row>,
    pub passed: usize,
}

impl Fig1Report {
    pub fn total(&self) -> usize {
        self.rows.len()
    }

    pub fn pass_fraction(&self) -> f64 {
        self.passed as f64 / self.total() as f64
    }

    /// `n,mean,trial_stddev,analytic` rows for external plotting.
    pub fn write_plot_data<W: Write>(&self, out: W) -> Result<(), ResultsError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "mean", "trial_stddev", "analytic"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.mean.map(format_f64).unwrap_or_default(),
                r.trial_stddev.map(format_f64).unwrap_or_default(),
                format_f64(r.analytic),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Checks every row against the closed form: a row passes when
/// `|mean - analytic| <= 4 * max(trial_stddev, mean_std_error)`.
///
/// The reference comes from the `analytic` column when present, otherwise
/// from the integrand number encoded in the name.
pub fn check_fig1(table: &ResultsTable) -> Result<Fig1Report, ResultsError> {
    let mut rows = Vec::with_capacity(table.rows.len());
    for r in &table.rows {
        let from_name = index_from_name(&r.name);
        let analytic = match (r.analytic, from_name) {
            (Some(a), _) => a,
            (None, Some(n)) => analytic_harmonic(n),
            (None, None) => {
                return Err(ResultsError::Malformed(format!(
                    "row `{}` has no analytic value and no recoverable index",
                    r.name
                )))
            }
        };
        let band = 4.0
            * r.trial_stddev
                .unwrap_or(f64::NAN)
                .max(r.mean_std_error.unwrap_or(f64::NAN));
        let pass = r.mean.is_some_and(|m| (m - analytic).abs() <= band);
        rows.push(Fig1Row {
            name: r.name.clone(),
            n: from_name.unwrap_or(r.n),
            mean: r.mean,
            trial_stddev: r.trial_stddev,
            mean_std_error: r.mean_std_error,
            analytic,
            band,
            pass,
        });
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    Ok(Fig1Report { rows, passed })
}
