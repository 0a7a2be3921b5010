//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a fig1 check below its pass threshold,
//! 2 invalid or unreadable input, 3 runtime failure.

pub mod fig1;
pub mod jobfile;
pub mod results;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::batch::{run_batch, BatchError};
use fig1::{check_fig1, gen_fig1};
use jobfile::{load_job, write_job, JobFileError};
use results::{ResultsError, ResultsTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mcbatch", version, about = "Batched Monte Carlo integration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a job file and write the results table (CSV).
    Run {
        job: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (0 = all hardware threads).
        #[arg(long, env = "MCBATCH_WORKERS")]
        workers: Option<usize>,
    },
    /// Write the harmonic benchmark job.
    #[command(name = "gen-fig1")]
    GenFig1 {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a harmonic results table against the closed form.
    #[command(name = "check-fig1")]
    CheckFig1 {
        results: PathBuf,
        /// Write `n,mean,trial_stddev,analytic` plot data here.
        #[arg(long)]
        plot_out: Option<PathBuf>,
        /// Fraction of rows that must pass.
        #[arg(long, default_value_t = 0.95)]
        min_pass: f64,
    },
    /// Check a job file without running it.
    Validate { job: PathBuf },
}

/// Per-run settings that override the job file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub workers: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::CheckFailed(_) => EXIT_CHECK_FAILED,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) | CliError::CheckFailed(m) => m,
        }
    }
}

impl From<JobFileError> for CliError {
    fn from(e: JobFileError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Runs a job file and writes its results table to `out` (stdout if `None`).
pub fn run_command(
    job_path: &Path,
    out: Option<&Path>,
    overrides: Overrides,
) -> Result<ResultsTable, CliError> {
    let mut job = load_job(job_path)?;
    if let Some(s) = overrides.seed {
        job.seed = s;
    }
    if let Some(t) = overrides.trials {
        job.trials = t;
    }
    if let Some(w) = overrides.workers {
        job.workers = w;
    }
    let result = run_batch(&job).map_err(|e| match e {
        BatchError::Validation(r) => CliError::Validation(format!("invalid job:\n{r}")),
        other => CliError::Runtime(other.to_string()),
    })?;
    log::info!(
        "{} integrands in {:.3}s",
        result.entries.len(),
        result.wall_seconds
    );
    let table = ResultsTable::from_batch(&result);
    let write_err = |e: ResultsError| CliError::Runtime(format!("cannot write results: {e}"));
    match out {
        Some(path) => table.write_csv(create(path)?).map_err(write_err)?,
        None => table.write_csv(io::stdout().lock()).map_err(write_err)?,
    }
    if result.failed() == result.entries.len() {
        let first = result.entries[0].error.clone().unwrap_or_default();
        return Err(CliError::Runtime(format!(
            "every integrand failed; first error: {first}"
        )));
    }
    for e in result.entries.iter().filter(|e| e.error.is_some()) {
        log::warn!(
            "integrand `{}` failed: {}",
            e.name,
            e.error.as_deref().unwrap_or("")
        );
    }
    Ok(table)
}

/// Loads a results table and checks it; `Ok` carries the report only when
/// at least `min_pass` of the rows pass.
pub fn check_command(
    results: &Path,
    plot_out: Option<&Path>,
    min_pass: f64,
) -> Result<fig1::Fig1Report, CliError> {
    let file = File::open(results)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", results.display())))?;
    let table = ResultsTable::read_csv(file).map_err(|e| CliError::Validation(e.to_string()))?;
    let report = check_fig1(&table).map_err(|e| CliError::Validation(e.to_string()))?;
    if let Some(path) = plot_out {
        report
            .write_plot_data(create(path)?)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let summary = format!(
        "{}/{} integrals within the 4-sigma band",
        report.passed,
        report.total()
    );
    if report.pass_fraction() < min_pass {
        return Err(CliError::CheckFailed(summary));
    }
    Ok(report)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            job,
            out,
            seed,
            trials,
            workers,
        } => {
            run_command(
                &job,
                out.as_deref(),
                Overrides {
                    seed,
                    trials,
                    workers,
                },
            )?;
        }
        Command::GenFig1 {
            n,
            samples,
            trials,
            seed,
            out,
        } => {
            if n == 0 {
                return Err(CliError::Validation("--n must be at least 1".into()));
            }
            write_job(&gen_fig1(n, samples, trials, seed), &out)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))?;
        }
        Command::CheckFig1 {
            results,
            plot_out,
            min_pass,
        } => {
            let report = check_command(&results, plot_out.as_deref(), min_pass)?;
            let mut stdout = io::stdout().lock();
            for r in report.rows.iter().filter(|r| !r.pass) {
                let _ = writeln!(
                    stdout,
                    "FAIL {}: mean={:?} analytic={:e} band={:e}",
                    r.name, r.mean, r.analytic, r.band
                );
            }
            let _ = writeln!(
                stdout,
                "{}/{} integrals within the 4-sigma band",
                report.passed,
                report.total()
            );
        }
        Command::Validate { job } => {
            load_job(&job)?;
            println!("{}: ok", job.display());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
