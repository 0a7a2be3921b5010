//! CSV results table.
//!
//! One row per integrand in job order. Floating-point fields use 17
//! significant digits (`{:.16e}`) so they parse back to the same bits.

use std::io::{Read, Write};

use thiserror::Error;

use crate::batch::BatchResult;

pub const HEADER: [&str; 12] = [
    "name",
    "n",
    "dim",
    "method",
    "samples",
    "trials",
    "mean",
    "trial_stddev",
    "mean_std_error",
    "analytic",
    "abs_error",
    "warnings",
];

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("malformed results: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsRow {
    pub name: String,
    /// 1-based position in the job.
    pub n: usize,
    pub dim: usize,
    pub method: String,
    pub samples: u64,
    pub trials: usize,
    pub mean: Option<f64>,
    pub trial_stddev: Option<f64>,
    pub mean_std_error: Option<f64>,
    pub analytic: Option<f64>,
    pub abs_error: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultsRow>,
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

impl ResultsTable {
    pub fn from_batch(result: &BatchResult) -> Self {
        let rows = result
            .entries
            .iter()
            .map(|e| {
                let s = e.summary.as_ref();
                let mean = s.map(|s| s.mean);
                ResultsRow {
                    name: e.name.clone(),
                    n: e.index + 1,
                    dim: e.dim,
                    method: e.method.to_string(),
                    samples: e.n_samples,
                    trials: e.trials,
                    mean,
                    trial_stddev: s.map(|s| s.trial_stddev),
                    mean_std_error: s.map(|s| s.mean_std_error()),
                    analytic: e.analytic,
                    abs_error: mean.zip(e.analytic).map(|(m, a)| (m - a).abs()),
                    warnings: e.warnings.clone(),
                }
            })
            .collect();
        ResultsTable { rows }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ResultsError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.name.clone(),
                r.n.to_string(),
                r.dim.to_string(),
                r.method.clone(),
                r.samples.to_string(),
                r.trials.to_string(),
                opt(r.mean),
                opt(r.trial_stddev),
                opt(r.mean_std_error),
                opt(r.analytic),
                opt(r.abs_error),
                r.warnings.join(";"),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, ResultsError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(input);
        let mut records = rdr.records();
        let header = records
            .next()
            .ok_or_else(|| ResultsError::Malformed("empty file".into()))??;
        if header.iter().ne(HEADER.iter().copied()) {
            return Err(ResultsError::Malformed(format!(
                "unexpected header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for (line, rec) in records.enumerate() {
            let rec = rec?;
            let line = line + 2;
            if rec.len() != HEADER.len() {
                return Err(ResultsError::Malformed(format!(
                    "line {line}: expected {} fields, found {}",
                    HEADER.len(),
                    rec.len()
                )));
            }
            let int = |i: usize| -> Result<u64, ResultsError> {
                rec[i].parse().map_err(|_| {
                    ResultsError::Malformed(format!("line {line}: bad {} `{}`", HEADER[i], &rec[i]))
                })
            };
            let float = |i: usize| -> Result<Option<f64>, ResultsError> {
                if rec[i].is_empty() {
                    return Ok(None);
                }
                rec[i].parse().map(Some).map_err(|_| {
                    ResultsError::Malformed(format!("line {line}: bad {} `{}`", HEADER[i], &rec[i]))
                })
            };
            rows.push(ResultsRow {
                name: rec[0].to_string(),
                n: int(1)? as usize,
                dim: int(2)? as usize,
                method: rec[3].to_string(),
                samples: int(4)?,
                trials: int(5)? as usize,
                mean: float(6)?,
                trial_stddev: float(7)?,
                mean_std_error: float(8)?,
                analytic: float(9)?,
                abs_error: float(10)?,
                warnings: if rec[11].is_empty() {
                    Vec::new()
                } else {
                    rec[11].split(';').map(str::to_string).collect()
                },
            });
        }
        if rows.is_empty() {
            return Err(ResultsError::Malformed("no result rows".into()));
        }
        Ok(ResultsTable { rows })
    }
}
