//! Batched Monte Carlo integration.
//!
//! Integrands are written in a small expression language ([`expr`]),
//! sampled with counter-based streams ([`sampling`]), estimated by plain,
//! stratified or tree-refined Monte Carlo ([`estimator`]) and run in bulk,
//! thousands of heterogeneous integrals per job, by [`batch`].
//!
//! ```
//! use mcbatch::batch::{run_batch, IntegrandSpec, JobSpec};
//! use mcbatch::sampling::HyperRect;
//!
//! let job = JobSpec {
//!     seed: 7,
//!     trials: 4,
//!     workers: 0,
//!     integrands: vec![
//!         IntegrandSpec::direct("plane", "abs(x1 + x2)", HyperRect::unit(2), 20_000),
//!         IntegrandSpec::direct("cube", "abs(x1 + x2 - x3)", HyperRect::unit(3), 20_000),
//!     ],
//! };
//! let result = run_batch(&job).unwrap();
//! let plane = result.get("plane").unwrap().summary.as_ref().unwrap();
//! assert!((plane.mean - 1.0).abs() < 0.02);
//! ```

pub mod batch;
pub mod cli;
pub mod estimator;
pub mod exec;
pub mod expr;
pub mod sampling;
