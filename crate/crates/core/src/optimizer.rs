//! Leverage selection: full, fractional and total-leverage-constrained Kelly.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    expected_log_growth, log_return_variance, sharpe_ratio, GbmParams, GrowthProfile,
    LeverageVector, MarketConfig,
};

/// Relative per-component tolerance when deciding whether a leverage vector
/// is a multiple of full Kelly.
pub const COLLINEARITY_RTOL: f64 = 1e-6;
/// Absolute floor for near-zero components in the same test.
pub const COLLINEARITY_ATOL: f64 = 1e-12;

/// Growth-optimal leverage `k* = Σ⁻¹ (μ - r e)`.
pub fn full_kelly(params: &GbmParams, market: &MarketConfig) -> LeverageVector {
    LeverageVector::new(params.cholesky().solve(&params.excess_drift(market)))
}

/// `α k*`.
pub fn fractional_kelly(params: &GbmParams, market: &MarketConfig, alpha: f64) -> Result<LeverageVector> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("must be non-negative, got {alpha}")));
    }
    Ok(full_kelly(params, market).scaled(alpha))
}

/// Growth-maximizing leverage with total leverage pinned to `kappa_target`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSolution {
    pub k: LeverageVector,
    /// Lagrange multiplier of the total-leverage constraint.
    pub lambda: f64,
    pub kappa_target: f64,
}

/// Maximizes `L(k)` subject to `Σ k_j = κ₀`:
///
/// ```text
/// λ = (eᵀ Σ⁻¹ (μ - r e) - κ₀) / (eᵀ Σ⁻¹ e)
/// k = Σ⁻¹ (μ - r e - λ e)
/// ```
pub fn constrained_kelly(params: &GbmParams, market: &MarketConfig, kappa0: f64) -> Result<ConstrainedSolution> {
    if !kappa0.is_finite() {
        return Err(Error::invalid("kappa0", "must be finite"));
    }
    let chol = params.cholesky();
    let ones = DVector::from_element(params.dim(), 1.0);
    let unconstrained = chol.solve(&params.excess_drift(market));
    let ones_solved = chol.solve(&ones);
    let lambda = (unconstrained.sum() - kappa0) / ones_solved.sum();
    let k = unconstrained - &ones_solved * lambda;
    Ok(ConstrainedSolution {
        k: LeverageVector::new(k),
        lambda,
        kappa_target: kappa0,
    })
}

/// Profile of the full-Kelly portfolio: `L = r + S²/2`, `V = S²`.
pub fn optimal_growth(params: &GbmParams, market: &MarketConfig) -> GrowthProfile {
    let s = sharpe_ratio(params, market);
    GrowthProfile {
        expected_log_growth: market.risk_free_rate() + 0.5 * s * s,
        log_return_variance: s * s,
        sharpe: s,
        kelly_fraction: Some(1.0),
        over_kelly: false,
    }
}

/// Ratio of `k` to full-Kelly leverage, defined only when `k` is a scalar
/// multiple of it.
pub fn kelly_fraction_estimate(k: &LeverageVector, params: &GbmParams, market: &MarketConfig) -> Option<f64> {
    if k.len() != params.dim() {
        return None;
    }
    let kstar = full_kelly(params, market);
    let kstar = kstar.as_vector();
    let (pivot, scale) = kstar
        .iter()
        .enumerate()
        .map(|(j, v)| (j, v.abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    if scale <= COLLINEARITY_ATOL {
        return None;
    }
    let alpha = k.as_slice()[pivot] / kstar[pivot];
    let collinear = k.as_slice().iter().zip(kstar.iter()).all(|(kj, sj)| {
        let target = alpha * sj;
        (kj - target).abs() <= COLLINEARITY_RTOL * target.abs() + COLLINEARITY_ATOL
    });
    collinear.then_some(alpha)
}

/// Growth profile of an arbitrary leverage vector, with the Kelly fraction
/// filled in when it is defined.
pub fn growth_profile(params: &GbmParams, k: &LeverageVector, market: &MarketConfig) -> Result<GrowthProfile> {
    let l = expected_log_growth(params, k, market)?;
    let v = log_return_variance(params, k)?;
    let alpha = kelly_fraction_estimate(k, params, market);
    Ok(GrowthProfile {
        expected_log_growth: l,
        log_return_variance: v,
        sharpe: sharpe_ratio(params, market),
        kelly_fraction: alpha,
        over_kelly: alpha.is_some_and(|a| a > 1.0),
    })
}

/// How a leverage vector is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LeverageSpec {
    Explicit { k: Vec<f64> },
    FullKelly,
    Fractional { alpha: f64 },
    Constrained { kappa: f64 },
}

impl LeverageSpec {
    /// Resolves to a leverage vector; the multiplier is returned for the
    /// constrained case.
    pub fn resolve(&self, params: &GbmParams, market: &MarketConfig) -> Result<(LeverageVector, Option<f64>)> {
        match self {
            LeverageSpec::Explicit { k } => {
                crate::error::check_len("leverage", params.dim(), k.len())?;
                Ok((LeverageVector::from(k.clone()), None))
            }
            LeverageSpec::FullKelly => Ok((full_kelly(params, market), None)),
            LeverageSpec::Fractional { alpha } => Ok((fractional_kelly(params, market, *alpha)?, None)),
            LeverageSpec::Constrained { kappa } => {
                let sol = constrained_kelly(params, market, *kappa)?;
                Ok((sol.k, Some(sol.lambda)))
            }
        }
    }

    /// Resolves without model parameters; only explicit vectors of length
    /// `m` succeed.
    pub fn resolve_explicit(&self, m: usize) -> Result<LeverageVector> {
        match self {
            LeverageSpec::Explicit { k } => {
                crate::error::check_len("leverage", m, k.len())?;
                Ok(LeverageVector::from(k.clone()))
            }
            _ => Err(Error::Config(format!("{self:?} leverage needs drift and covariance estimates"))),
        }
    }

    /// Whether resolving needs drift and covariance estimates.
    pub fn needs_params(&self) -> bool {
        !matches!(self, LeverageSpec::Explicit { .. })
    }
}

impl std::str::FromStr for LeverageSpec {
    type Err = Error;

    /// `full-kelly`, `fractional:<alpha>`, `constrained:<kappa>`, or a
    /// comma-separated vector such as `0.87,1.13`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let number = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number `{v}` in leverage `{s}`: {e}")))
        };
        if s == "full-kelly" {
            return Ok(LeverageSpec::FullKelly);
        }
        if let Some(a) = s.strip_prefix("fractional:") {
            return Ok(LeverageSpec::Fractional { alpha: number(a)? });
        }
        if let Some(kappa) = s.strip_prefix("constrained:") {
            return Ok(LeverageSpec::Constrained { kappa: number(kappa)? });
        }
        if s.is_empty() {
            return Err(Error::Config("empty leverage specification".into()));
        }
        let k = s.split(',').map(number).collect::<Result<Vec<_>>>()?;
        Ok(LeverageSpec::Explicit { k })
    }
}
