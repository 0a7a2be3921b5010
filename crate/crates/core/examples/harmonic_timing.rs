//! Times one trial of the harmonic integral at a million samples.
use std::time::Instant;

use mcbatch::cli::fig1::{analytic_harmonic, wavenumber, HARMONIC_EXPR};
use mcbatch::estimator::direct_mc;
use mcbatch::expr::{compile, parse};
use mcbatch::sampling::{HyperRect, StreamKey};

fn main() {
    let program = compile(&parse(HARMONIC_EXPR).unwrap(), 4, &["a", "b", "k"]).unwrap();
    let rect = HyperRect::unit(4);
    for n in [1, 50, 100] {
        let t = Instant::now();
        let est = direct_mc(
            &program,
            &[1.0, 1.0, wavenumber(n)],
            &rect,
            1_000_000,
            StreamKey::new(0, n as u64, 0),
        )
        .unwrap();
        println!(
            "n={n}: {:.6e} ± {:.2e} (analytic {:.6e}) in {:.3}s",
            est.value,
            est.std_error,
            analytic_harmonic(n),
            t.elapsed().as_secs_f64()
        );
    }
}
