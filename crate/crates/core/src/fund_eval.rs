//! Implied Sharpe ratio and Kelly fraction of a fund from its reported
//! returns, assuming it runs a fractional Kelly book.
//!
//! Matching `L - r = (α - α²/2) S²` and `V = α² S²` gives
//!
//! ```text
//! α  = 2V / (2L' + V)
//! S² = (L' + V/2) / α          with L' = L - r
//! ```

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MarketConfig;
use crate::rng::substream;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnSummary {
    /// Annualized mean log-return `L`.
    pub mean_log_return: f64,
    /// Annualized log-return variance `V`.
    pub log_return_variance: f64,
    pub n_observations: usize,
    pub periods_per_year: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskClass {
    /// `α ≤ 1`.
    Fractional,
    /// `1 < α ≤ 2`: more risk than growth-optimal for no extra growth.
    SubOptimal,
    /// `α > 2`: expected log-growth below the risk-free rate; capital tends
    /// to zero in probability.
    CollapseBound,
}

impl RiskClass {
    pub fn from_alpha(alpha: f64) -> Self {
        if alpha <= 1.0 {
            RiskClass::Fractional
        } else if alpha <= 2.0 {
            RiskClass::SubOptimal
        } else {
            RiskClass::CollapseBound
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundEvalResult {
    pub alpha: f64,
    pub sharpe: f64,
    pub risk_class: RiskClass,
}

/// Converts simple returns `R` to log-returns `log(1 + R)`.
pub fn simple_to_log_returns(simple: &[f64]) -> Result<Vec<f64>> {
    simple
        .iter()
        .map(|r| {
            if *r > -1.0 && r.is_finite() {
                Ok(r.ln_1p())
            } else {
                Err(Error::invalid("returns", format!("simple return {r} is not above -100%")))
            }
        })
        .collect()
}

/// Annualized mean and variance (divisor `n - 1`) of per-period log-returns.
pub fn summarize_returns(log_returns: &[f64], periods_per_year: f64) -> Result<ReturnSummary> {
    if log_returns.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} returns; at least 2 are required",
            log_returns.len()
        )));
    }
    if !(periods_per_year > 0.0) || !periods_per_year.is_finite() {
        return Err(Error::invalid("periods_per_year", "must be positive"));
    }
    if log_returns.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("returns", "all returns must be finite"));
    }
    Ok(ReturnSummary {
        mean_log_return: periods_per_year * stats::mean(log_returns),
        log_return_variance: periods_per_year * stats::sample_variance(log_returns),
        n_observations: log_returns.len(),
        periods_per_year,
    })
}

pub fn reverse_engineer(summary: &ReturnSummary, market: &MarketConfig) -> Result<FundEvalResult> {
    let v = summary.log_return_variance;
    let excess = summary.mean_log_return - market.risk_free_rate();
    if !(v > 0.0) {
        return Err(Error::NotInvertible(
            "zero return variance leaves the Kelly fraction undefined".into(),
        ));
    }
    let denom = 2.0 * excess + v;
    if !(denom > 0.0) {
        return Err(Error::NotInvertible(format!(
            "2(L - r) + V = {denom} is not positive; growth is outside the fractional Kelly range"
        )));
    }
    let alpha = 2.0 * v / denom;
    let sharpe = ((excess + 0.5 * v) / alpha).sqrt();
    Ok(FundEvalResult {
        alpha,
        sharpe,
        risk_class: RiskClass::from_alpha(alpha),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub replicates: usize,
    /// Replicates whose resampled returns could not be inverted.
    pub failed_replicates: usize,
    pub alpha_p05: f64,
    pub alpha_p95: f64,
    pub sharpe_p05: f64,
    pub sharpe_p95: f64,
}

/// Parametric bootstrap of `(α, S)`: each replicate draws `n_observations`
/// per-period log-returns from `N(L / p, V / p)` (with `p` periods per year),
/// re-summarizes and re-inverts. Replicate `i` uses substream `i` of `seed`.
pub fn bootstrap_interval(
    summary: &ReturnSummary,
    market: &MarketConfig,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapInterval> {
    if replicates < 2 {
        return Err(Error::invalid("replicates", "at least 2 are required"));
    }
    let p = summary.periods_per_year;
    let mean = summary.mean_log_return / p;
    let sd = (summary.log_return_variance / p).sqrt();
    let n = summary.n_observations;

    let draws: Vec<Option<FundEvalResult>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let sample: Vec<f64> = (0..n)
                .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            summarize_returns(&sample, p)
                .and_then(|s| reverse_engineer(&s, market))
                .ok()
        })
        .collect();

    let ok: Vec<FundEvalResult> = draws.iter().flatten().copied().collect();
    if ok.is_empty() {
        return Err(Error::NotInvertible("no bootstrap replicate could be inverted".into()));
    }
    let alphas: Vec<f64> = ok.iter().map(|r| r.alpha).collect();
    let sharpes: Vec<f64> = ok.iter().map(|r| r.sharpe).collect();
    Ok(BootstrapInterval {
        replicates,
        failed_replicates: replicates - ok.len(),
        alpha_p05: stats::percentile(&alphas, 0.05),
        alpha_p95: stats::percentile(&alphas, 0.95),
        sharpe_p05: stats::percentile(&sharpes, 0.05),
        sharpe_p95: stats::percentile(&sharpes, 0.95),
    })
}
