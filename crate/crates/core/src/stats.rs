//! Small sample-statistics helpers shared by the simulation, backtest and
//! fund-evaluation modules.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::linalg::compensated_sum;

pub fn mean(xs: &[f64]) -> f64 {
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

/// Sample variance with divisor `n - 1`, computed on values shifted by the
/// first element so that constant data gives exactly zero.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let shift = xs[0];
    let s1 = compensated_sum(xs.iter().map(|x| x - shift));
    let s2 = compensated_sum(xs.iter().map(|x| (x - shift) * (x - shift)));
    ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0)
}

/// Linear-interpolation percentile (`q` in `[0, 1]`) of an unsorted sample.
pub fn percentile(xs: &[f64], q: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Kolmogorov–Smirnov statistic `sup |F_n - F|` against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the one-sample KS statistic `d` with `n` samples,
/// using Stephens' small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let j = j as f64;
        let term = 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// KS test of a sample against `N(mean, variance)`; returns `(D, p)`.
pub fn ks_test_normal(xs: &[f64], mean: f64, variance: f64) -> (f64, f64) {
    let normal = Normal::new(mean, variance.sqrt()).expect("positive variance");
    let d = ks_statistic(xs, |x| normal.cdf(x));
    (d, ks_pvalue(d, xs.len()))
}
