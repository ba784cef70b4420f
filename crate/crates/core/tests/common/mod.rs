#![allow(dead_code)]

use std::path::PathBuf;

use kellygrowth::nalgebra::{DMatrix, DVector};
use kellygrowth::{GbmParams, MarketConfig};
use rand::Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Post-tax drift with the rounded covariance.
pub fn post_tax() -> GbmParams {
    GbmParams::from_covariance(
        DVector::from_vec(vec![0.079, 0.031]),
        &DMatrix::from_row_slice(2, 2, &[0.0396, -0.0093, -0.0093, 0.0152]),
    )
    .unwrap()
}

pub fn pre_tax() -> GbmParams {
    GbmParams::new(
        DVector::from_vec(vec![0.099, 0.051]),
        DVector::from_vec(vec![0.199, 0.123]),
        DMatrix::from_row_slice(2, 2, &[1.0, -0.377, -0.377, 1.0]),
    )
    .unwrap()
}

pub fn zero_rate() -> MarketConfig {
    MarketConfig::default()
}

/// Random well-conditioned parameters: correlation from `A Aᵀ + I/2`.
pub fn random_params<R: Rng>(rng: &mut R, m: usize) -> GbmParams {
    let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    let b: DMatrix<f64> = &a * a.transpose() + DMatrix::<f64>::identity(m, m) * 0.5;
    let d = DVector::from_fn(m, |i, _| b[(i, i)].sqrt());
    let corr = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { b[(i, j)] / (d[i] * d[j]) });
    let mu = DVector::from_fn(m, |_, _| rng.random_range(-0.1..0.3));
    let sigma = DVector::from_fn(m, |_, _| rng.random_range(0.05..0.6));
    GbmParams::new(mu, sigma, corr).unwrap()
}

/// `L(k)` evaluated directly from its definition.
pub fn growth_by_definition(p: &GbmParams, k: &[f64], r: f64) -> f64 {
    let m = p.dim();
    let mut l = r;
    for i in 0..m {
        l += k[i] * (p.mu()[i] - r);
        for j in 0..m {
            l -= 0.5 * k[i] * p.cov()[(i, j)] * k[j];
        }
    }
    l
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
