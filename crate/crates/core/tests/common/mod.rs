//! Reference values computed independently of the estimators.
#![allow(dead_code)]

pub mod exprs;

use num_complex::Complex64;

/// Midpoint rule on an `m^d` grid over the unit cube.
pub fn midpoint_unit_cube(dim: usize, m: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut sum = 0.0;
    let total = m.pow(dim as u32);
    for _ in 0..total {
        for (xi, &i) in x.iter_mut().zip(&idx) {
            *xi = (i as f64 + 0.5) / m as f64;
        }
        sum += f(&x);
        for i in idx.iter_mut().rev() {
            *i += 1;
            if *i < m {
                break;
            }
            *i = 0;
        }
    }
    sum / total as f64
}

/// `∫_{[0,1]^4} e^{ik Σx} dx` expanded by the binomial theorem:
/// `(e^{ik} - 1)^4 / (ik)^4 = Σ_j C(4,j) (-1)^{4-j} e^{ijk} / (ik)^4`.
pub fn harmonic_binomial(k: f64) -> f64 {
    let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, c) in binom.iter().enumerate() {
        let sign = if (4 - j) % 2 == 0 { 1.0 } else { -1.0 };
        acc += Complex64::from_polar(c * sign, j as f64 * k);
    }
    let v = acc / Complex64::new(0.0, k).powi(4);
    v.re + v.im
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `∫_{[0,1]^2} exp(-100((x1-½)² + (x2-½)²))`, as the square of the 1-D
/// integral `√(π/100)·erf(5)` evaluated with statrs.
pub fn gaussian_peak_closed_form() -> f64 {
    let one_d = (std::f64::consts::PI / 100.0).sqrt() * statrs::function::erf::erf(5.0);
    one_d * one_d
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// KS critical value at significance 0.001 for sample sizes `n`, `m`.
pub fn ks_critical_001(n: usize, m: usize) -> f64 {
    1.949 * (((n + m) as f64) / ((n * m) as f64)).sqrt()
}
