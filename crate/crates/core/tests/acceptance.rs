//! Acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! The process exits nonzero if any criterion fails, except the worker
//! scaling check on a machine with fewer than eight physical cores, where
//! the target speedup cannot be measured. That line is still printed as
//! FAIL. Set `MCBATCH_ACCEPTANCE_STRICT=1` to make every failure fatal.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::exprs::{arb_expr, MAX_VAR, PARAMS};
use mcbatch::batch::{run_batch, IntegrandSpec, JobSpec};
use mcbatch::cli::fig1::{check_fig1, gen_fig1, HARMONIC_DIM, HARMONIC_EXPR};
use mcbatch::cli::results::ResultsTable;
use mcbatch::estimator::{direct_mc, tree_refine, McEstimate, RefineConfig};
use mcbatch::exec::{resolve_workers, with_workers};
use mcbatch::expr::{compile, parse, BinOp, Expr};
use mcbatch::sampling::{HyperRect, StreamKey};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fig1_reproduction() -> Outcome {
    let job = gen_fig1(100, 1_000_000, 10, 0);
    let result = run_batch(&job).map_err(|e| e.to_string())?;
    let table = ResultsTable::from_batch(&result);
    let report = check_fig1(&table).map_err(|e| e.to_string())?;
    check(
        report.passed >= 95,
        format!(
            "{}/100 within 4 sigma, {:.1}s wall",
            report.passed, result.wall_seconds
        ),
    )
}

fn heterogeneous_batch() -> Outcome {
    let grid = common::midpoint_unit_cube(3, 400, |x| (x[0] + x[1] - x[2]).abs());
    let job = JobSpec {
        seed: 2,
        trials: 1,
        workers: 0,
        integrands: vec![
            IntegrandSpec::direct("sum2", "abs(x1+x2)", HyperRect::unit(2), 1_000_000),
            IntegrandSpec::direct("sum3", "abs(x1+x2-x3)", HyperRect::unit(3), 1_000_000),
        ],
    };
    let result = run_batch(&job).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (entry, exact) in result.entries.iter().zip([1.0, grid]) {
        let est = &entry.summary.as_ref().ok_or("integrand failed")?.per_trial[0];
        let z = (est.value - exact) / est.std_error;
        ok &= z.abs() <= 3.0;
        detail.push(format!("{} z={z:+.2}", entry.name));
    }
    check(ok, detail.join(", "))
}

fn determinism() -> Outcome {
    let job = gen_fig1(100, 10_000, 10, 3);
    let all = resolve_workers(0);
    let csv = |workers| {
        run_batch(&JobSpec {
            workers,
            ..job.clone()
        })
        .map(|r| ResultsTable::from_batch(&r).to_csv_string())
        .map_err(|e| e.to_string())
    };
    let one = csv(1)?;
    // 8 is added so that a pool larger than one thread is exercised on small machines
    let mut others = vec![2, 8, all];
    others.sort();
    others.dedup();
    let mut same = true;
    for &w in &others {
        same &= csv(w)? == one;
    }
    check(same, format!("workers 1 vs {others:?} (all = {all})"))
}

fn calibration() -> Outcome {
    let p = compile(&parse("x1").unwrap(), 1, &[] as &[&str]).unwrap();
    let rect = HyperRect::unit(1);
    let mut covered = 0;
    let mut ratios = Vec::new();
    for seed in 0..100 {
        let key = StreamKey::new(seed, 0, 0);
        let small = direct_mc(&p, &[], &rect, 10_000, key).map_err(|e| e.to_string())?;
        let large = direct_mc(&p, &[], &rect, 160_000, key).map_err(|e| e.to_string())?;
        covered += ((small.value - 0.5).abs() <= 4.0 * small.std_error) as u32;
        ratios.push(small.std_error / large.std_error);
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    check(
        covered >= 99 && lo >= 3.2 && hi <= 5.0,
        format!("{covered}/100 covered, 16x ratio in [{lo:.3}, {hi:.3}]"),
    )
}

fn variance_reduction() -> Outcome {
    let p = compile(
        &parse("exp(-100*((x1-0.5)^2 + (x2-0.5)^2))").unwrap(),
        2,
        &[] as &[&str],
    )
    .unwrap();
    let rect = HyperRect::unit(2);
    let exact = common::gaussian_peak_closed_form();
    let budget = 100_000;
    let cfg = RefineConfig::for_budget(2, budget);
    let covers = |e: &McEstimate| (e.value - exact).abs() <= 3.0 * e.std_error;
    let (mut tree_se, mut direct_se) = (Vec::new(), Vec::new());
    let (mut tree_cov, mut direct_cov) = (0, 0);
    for seed in 0..20 {
        let key = StreamKey::new(seed, 0, 0);
        let t = tree_refine(&p, &[], &rect, &cfg, key).map_err(|e| e.to_string())?;
        let d = direct_mc(&p, &[], &rect, budget, key).map_err(|e| e.to_string())?;
        if t.samples_drawn > budget {
            return Err(format!("tree drew {} samples", t.samples_drawn));
        }
        tree_cov += covers(&t.estimate) as u32;
        direct_cov += covers(&d) as u32;
        tree_se.push(t.estimate.std_error);
        direct_se.push(d.std_error);
    }
    let (mt, md) = (common::median(tree_se), common::median(direct_se));
    check(
        mt <= md && tree_cov == 20 && direct_cov == 20,
        format!(
            "median se tree {mt:.3e} vs direct {md:.3e}, 3-sigma coverage tree {tree_cov}/20 direct {direct_cov}/20"
        ),
    )
}

fn linearity() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let strategy = arb_expr();
    let rect = HyperRect::new(vec![-1.0, 0.0, 0.5, -2.0], vec![1.0, 2.0, 1.5, 0.0]).unwrap();
    let theta = [0.7, 2.5, -1.3];
    let (mut tested, mut drawn, mut worst) = (0, 0, 0.0f64);
    while tested < 100 {
        drawn += 1;
        if drawn > 10_000 {
            return Err(format!("only {tested} usable integrands in {drawn} draws"));
        }
        let f = strategy.new_tree(&mut runner).unwrap().current();
        let key = StreamKey::new(drawn, 7, 1);
        let est = |e: &Expr| {
            let p = compile(e, MAX_VAR, &PARAMS).unwrap();
            direct_mc(&p, &theta, &rect, 20_000, key)
        };
        let Ok(ef) = est(&f) else { continue };
        // linearity is asserted for integrands whose samples are all finite
        if ef.n_nonfinite > 0 {
            continue;
        }
        let scaled =
            est(&Expr::binary(BinOp::Mul, Expr::Num(3.0), f.clone())).map_err(|e| e.to_string())?;
        let scale = est(&Expr::call(mcbatch::expr::Func::Abs, vec![f.clone()]))
            .map_err(|e| e.to_string())?
            .value;
        if scaled.n_nonfinite > 0 {
            return Err(format!("3*({f}) overflowed where {f} did not"));
        }
        tested += 1;
        if scale == 0.0 {
            if scaled.value != 0.0 || ef.value != 0.0 {
                return Err(format!(
                    "{f}: nonzero estimate of an identically zero integrand"
                ));
            }
            continue;
        }
        let rel = (scaled.value - 3.0 * ef.value).abs() / (3.0 * scale);
        worst = worst.max(rel);
    }
    check(
        worst <= 1e-12,
        format!("100 integrands ({drawn} drawn), worst relative deviation {worst:.2e}"),
    )
}

fn parser_suite() -> Outcome {
    let none = Default::default();
    let table = [
        ("2+3*4", 14.0),
        ("2^3^2", 512.0),
        ("(2+3)*4", 20.0),
        ("8/4/2", 1.0),
        ("2-3-4", -5.0),
        ("-2^2", 4.0),
    ];
    for (src, want) in table {
        let got = parse(src).map_err(|e| e.to_string())?.eval(&[], &none);
        if got != want {
            return Err(format!("{src} = {got}, expected {want}"));
        }
    }
    let config = Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let strategy = (
        arb_expr(),
        proptest::array::uniform4(-2.0f64..2.0),
        proptest::array::uniform3(-3.0f64..3.0),
    );
    runner
        .run(&strategy, |(e, point, theta)| {
            let printed = e.to_string();
            let back = parse(&printed).map_err(|err| {
                proptest::test_runner::TestCaseError::fail(format!("{printed}: {err}"))
            })?;
            proptest::prop_assert_eq!(&back, &e, "{}", printed);
            let program = compile(&e, MAX_VAR, &PARAMS).unwrap();
            let fast = program.evaluate(&point, &theta);
            let bindings = PARAMS.iter().map(|p| p.to_string()).zip(theta).collect();
            let slow = e.eval(&point, &bindings);
            if slow.is_nan() {
                proptest::prop_assert!(fast.is_nan());
            } else if slow.is_infinite() {
                proptest::prop_assert_eq!(fast, slow);
            } else {
                proptest::prop_assert!(
                    (fast - slow).abs() <= 1e-15 * slow.abs(),
                    "{} vs {} for {}",
                    fast,
                    slow,
                    e
                );
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{} table cases, 10000 round-trip and compile cases",
        table.len()
    ))
}

fn scaling_job() -> JobSpec {
    let template = IntegrandSpec::direct("c", HARMONIC_EXPR, HyperRect::unit(HARMONIC_DIM), 20_000)
        .with_param("a", 1.0)
        .with_param("b", 1.0)
        .with_param("k", 10.0);
    JobSpec {
        seed: 8,
        trials: 2,
        workers: 1,
        integrands: (0..1000)
            .map(|i| IntegrandSpec {
                name: format!("c{i}"),
                ..template.clone()
            })
            .collect(),
    }
}

fn time_job(job: &JobSpec, workers: usize) -> Result<Duration, String> {
    let mut best = Duration::MAX;
    for _ in 0..3 {
        let start = Instant::now();
        run_batch(&JobSpec {
            workers,
            ..job.clone()
        })
        .map_err(|e| e.to_string())?;
        best = best.min(start.elapsed());
    }
    Ok(best)
}

/// Allowance for timing noise when checking that wall time does not grow.
const MONOTONE_SLACK: f64 = 1.05;

fn worker_scaling(physical: usize) -> Outcome {
    let job = scaling_job();
    let mut counts: Vec<usize> = (1..=physical).collect();
    if !counts.contains(&8) {
        counts.push(8);
    }
    let mut times = Vec::new();
    for &w in &counts {
        times.push((w, time_job(&job, w)?.as_secs_f64()));
    }
    let monotone = times
        .iter()
        .filter(|(w, _)| *w <= physical)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|p| p[1].1 <= p[0].1 * MONOTONE_SLACK);
    let t1 = times[0].1;
    let t8 = times.iter().find(|(w, _)| *w == 8).unwrap().1;
    let speedup = t1 / t8;
    let listing: Vec<String> = times.iter().map(|(w, t)| format!("{w}:{t:.2}s")).collect();
    check(
        monotone && speedup >= 3.0,
        format!(
            "physical cores: {physical}, times {}, speedup at 8 workers {speedup:.2}x",
            listing.join(" ")
        ),
    )
}

fn with_all_workers<T: Send>(op: impl FnOnce() -> T + Send) -> T {
    with_workers(0, op)
}

fn main() -> ExitCode {
    // cargo passes harness flags such as --test-threads; none apply here
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let strict = std::env::var("MCBATCH_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let physical = num_cpus::get_physical();
    let criteria: [Criterion; 8] = [
        ("harmonic family reproduction", Box::new(fig1_reproduction)),
        ("heterogeneous batch", Box::new(heterogeneous_batch)),
        ("determinism across worker counts", Box::new(determinism)),
        ("estimator calibration", Box::new(calibration)),
        (
            "tree variance reduction",
            Box::new(|| with_all_workers(variance_reduction)),
        ),
        ("seeded linearity", Box::new(|| with_all_workers(linearity))),
        ("parser suite", Box::new(parser_suite)),
        ("worker scaling", Box::new(move || worker_scaling(physical))),
    ];
    let mut fatal = false;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                let hardware_bound = i == 7 && physical < 8;
                let note = if hardware_bound {
                    " (needs at least 8 physical cores)"
                } else {
                    ""
                };
                println!("FAIL {}. {name}: {detail}{note} [{secs:.1}s]", i + 1);
                fatal |= strict || !hardware_bound;
            }
        }
    }
    if fatal {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
