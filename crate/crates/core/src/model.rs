//! Domain types and closed-form growth analytics for a leveraged portfolio of
//! instruments following a multivariate geometric Brownian motion.
//!
//! All rates are per annum. A portfolio holding capital fractions `k` in the
//! instruments (and `1 - κ` in cash at rate `r`) has log-capital increments
//! that are Gaussian with
//!
//! ```text
//! L(k) = r + k·(μ - r e) - kᵀΣk / 2      (mean per year)
//! V(k) = kᵀΣk                             (variance per year)
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{condition_number, Cholesky, MAX_CONDITION_NUMBER};

const CORR_TOLERANCE: f64 = 1e-12;

/// Drift, volatility and correlation of `m` instruments, with the derived
/// covariance `Σ = diag(σ) R diag(σ)` and its Cholesky factor.
///
/// Construction validates everything downstream code relies on, so a
/// `GbmParams` value always has a well-conditioned positive-definite `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbmParams {
    mu: DVector<f64>,
    sigma: DVector<f64>,
    corr: DMatrix<f64>,
    cov: DMatrix<f64>,
    chol: Cholesky,
}

impl GbmParams {
    pub fn new(mu: DVector<f64>, sigma: DVector<f64>, corr: DMatrix<f64>) -> Result<Self> {
        let m = mu.len();
        if m == 0 {
            return Err(Error::invalid("mu", "at least one instrument is required"));
        }
        check_len("sigma", m, sigma.len())?;
        if let Some(j) = mu.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("mu", format!("entry {j} is not finite")));
        }
        let corr = normalize_correlation(&corr)?;
        let cov = covariance_from_vol_corr(&sigma, &corr)?;
        let condition = condition_number(&cov);
        if condition > MAX_CONDITION_NUMBER {
            return Err(Error::IllConditioned {
                condition,
                limit: MAX_CONDITION_NUMBER,
            });
        }
        let chol = Cholesky::factor(&cov)?;
        Ok(Self {
            mu,
            sigma,
            corr,
            cov,
            chol,
        })
    }

    /// Builds parameters from a drift vector and a covariance matrix, deriving
    /// `σ_j = √Σ_jj` and `R_jk = Σ_jk / (σ_j σ_k)`.
    pub fn from_covariance(mu: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let m = mu.len();
        check_len("covariance rows", m, cov.nrows())?;
        check_len("covariance columns", m, cov.ncols())?;
        let mut sigma = DVector::zeros(m);
        for j in 0..m {
            let v = cov[(j, j)];
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(
                    "cov",
                    format!("diagonal entry {j} must be positive, got {v}"),
                ));
            }
            sigma[j] = v.sqrt();
        }
        let mut corr = DMatrix::identity(m, m);
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let scale = (cov[(i, j)] - cov[(j, i)]).abs();
                if scale > CORR_TOLERANCE * (cov[(i, i)] * cov[(j, j)]).sqrt() {
                    return Err(Error::invalid("cov", format!("not symmetric at ({i}, {j})")));
                }
                corr[(i, j)] = cov[(i, j)] / (sigma[i] * sigma[j]);
            }
        }
        Self::new(mu, sigma, corr)
    }

    /// Same volatilities and correlation with a replaced drift vector.
    pub fn with_mu(&self, mu: DVector<f64>) -> Result<Self> {
        check_len("mu", self.dim(), mu.len())?;
        if let Some(j) = mu.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("mu", format!("entry {j} is not finite")));
        }
        Ok(Self { mu, ..self.clone() })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    pub fn corr(&self) -> &DMatrix<f64> {
        &self.corr
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    /// `μ - r e`.
    pub fn excess_drift(&self, market: &MarketConfig) -> DVector<f64> {
        self.mu.add_scalar(-market.risk_free_rate())
    }

    /// Marginal parameters of a single instrument.
    pub fn marginal(&self, j: usize) -> Result<Self> {
        if j >= self.dim() {
            return Err(Error::invalid("instrument", format!("index {j} out of range")));
        }
        Self::new(
            DVector::from_element(1, self.mu[j]),
            DVector::from_element(1, self.sigma[j]),
            DMatrix::identity(1, 1),
        )
    }
}

fn normalize_correlation(corr: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = corr.nrows();
    if corr.ncols() != m {
        return Err(Error::InvalidCorrelation(format!(
            "matrix is {}x{}, not square",
            m,
            corr.ncols()
        )));
    }
    let mut out = DMatrix::identity(m, m);
    for i in 0..m {
        let d = corr[(i, i)];
        if (d - 1.0).abs() > CORR_TOLERANCE {
            return Err(Error::InvalidCorrelation(format!(
                "diagonal entry {i} is {d}, expected 1"
            )));
        }
        for j in 0..i {
            let a = corr[(i, j)];
            let b = corr[(j, i)];
            if !a.is_finite() || !b.is_finite() || (a - b).abs() > CORR_TOLERANCE {
                return Err(Error::InvalidCorrelation(format!(
                    "entries ({i}, {j}) and ({j}, {i}) differ: {a} vs {b}"
                )));
            }
            let v = 0.5 * (a + b);
            if v.abs() > 1.0 + CORR_TOLERANCE {
                return Err(Error::InvalidCorrelation(format!(
                    "entry ({i}, {j}) = {v} lies outside [-1, 1]"
                )));
            }
            let v = v.clamp(-1.0, 1.0);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// `diag(σ) R diag(σ)`.
///
/// The correlation matrix must be symmetric with unit diagonal and positive
/// definite; a failing Cholesky pivot is reported by index.
pub fn covariance_from_vol_corr(sigma: &DVector<f64>, corr: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = sigma.len();
    check_len("correlation rows", m, corr.nrows())?;
    check_len("correlation columns", m, corr.ncols())?;
    if let Some(j) = sigma.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::invalid(
            "sigma",
            format!("volatility {j} must be positive and finite, got {}", sigma[j]),
        ));
    }
    let corr = normalize_correlation(corr)?;
    Cholesky::factor(&corr)?;
    Ok(DMatrix::from_fn(m, m, |i, j| sigma[i] * corr[(i, j)] * sigma[j]))
}

/// Risk-free rate and the trading calendar used to convert daily data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    risk_free_rate: f64,
    trading_days_per_year: u32,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            risk_free_rate: 0.0,
            trading_days_per_year: 260,
        }
    }
}

impl MarketConfig {
    pub fn new(risk_free_rate: f64, trading_days_per_year: u32) -> Result<Self> {
        if !risk_free_rate.is_finite() {
            return Err(Error::invalid("risk_free_rate", "must be finite"));
        }
        if trading_days_per_year < 1 {
            return Err(Error::invalid("trading_days_per_year", "must be at least 1"));
        }
        Ok(Self {
            risk_free_rate,
            trading_days_per_year,
        })
    }

    /// Continuously compounded, per annum.
    pub fn risk_free_rate(&self) -> f64 {
        self.risk_free_rate
    }

    pub fn trading_days_per_year(&self) -> u32 {
        self.trading_days_per_year
    }
}

/// Fractions of capital held in each instrument. Entries may be negative or
/// exceed one; the remainder `1 - κ` sits in cash (or debt when negative).
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageVector(DVector<f64>);

impl LeverageVector {
    pub fn new(k: DVector<f64>) -> Self {
        Self(k)
    }

    pub fn zeros(m: usize) -> Self {
        Self(DVector::zeros(m))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total leverage `κ = Σ k_j`.
    pub fn kappa(&self) -> f64 {
        self.0.sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(&self.0 * factor)
    }
}

impl From<Vec<f64>> for LeverageVector {
    fn from(v: Vec<f64>) -> Self {
        Self(DVector::from_vec(v))
    }
}

/// Growth coordinates of a leveraged portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    /// `L`, per annum.
    pub expected_log_growth: f64,
    /// `V`, per annum.
    pub log_return_variance: f64,
    /// Sharpe ratio of the underlying instruments, per square-root year.
    pub sharpe: f64,
    /// Present only when the leverage is a scalar multiple of full Kelly.
    pub kelly_fraction: Option<f64>,
    /// Set when the Kelly fraction exceeds one: the same growth is available
    /// at lower variance with a smaller fraction.
    pub over_kelly: bool,
}

impl GrowthProfile {
    pub fn log_return_sd(&self) -> f64 {
        self.log_return_variance.sqrt()
    }
}

/// Gaussian law of a log-return over a fixed horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalSpec {
    pub mean: f64,
    pub variance: f64,
}

impl NormalSpec {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Expected log-return per year, `r + k·(μ - r e) - kᵀΣk/2`.
pub fn expected_log_growth(
    params: &GbmParams,
    k: &LeverageVector,
    market: &MarketConfig,
) -> Result<f64> {
    check_len("leverage", params.dim(), k.len())?;
    let excess = params.excess_drift(market);
    let quad = params.cholesky().quadratic_form(k.as_vector());
    Ok(market.risk_free_rate() + k.as_vector().dot(&excess) - 0.5 * quad)
}

/// Log-return variance per year, `kᵀΣk`.
pub fn log_return_variance(params: &GbmParams, k: &LeverageVector) -> Result<f64> {
    check_len("leverage", params.dim(), k.len())?;
    Ok(params.cholesky().quadratic_form(k.as_vector()))
}

/// `S = [(μ - r e)ᵀ Σ⁻¹ (μ - r e)]^{1/2}`.
pub fn sharpe_ratio(params: &GbmParams, market: &MarketConfig) -> f64 {
    params
        .cholesky()
        .inverse_quadratic_form(&params.excess_drift(market))
        .sqrt()
}

/// Growth profile of a fractional Kelly portfolio with fraction `alpha`:
/// `L = r + (α - α²/2) S²`, `V = α² S²`.
///
/// Fractions above one are accepted and flagged through
/// [`GrowthProfile::over_kelly`].
pub fn fractional_profile(sharpe: f64, alpha: f64, market: &MarketConfig) -> Result<GrowthProfile> {
    if !(sharpe >= 0.0) || !sharpe.is_finite() {
        return Err(Error::invalid("sharpe", format!("must be non-negative, got {sharpe}")));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("must be non-negative, got {alpha}")));
    }
    let s2 = sharpe * sharpe;
    Ok(GrowthProfile {
        expected_log_growth: market.risk_free_rate() + (alpha - 0.5 * alpha * alpha) * s2,
        log_return_variance: alpha * alpha * s2,
        sharpe,
        kelly_fraction: Some(alpha),
        over_kelly: alpha > 1.0,
    })
}

/// Law of `log(A_{t+δ} / A_t)` for constant leverage `k` over `delta` years.
pub fn predictive_log_return(
    params: &GbmParams,
    k: &LeverageVector,
    market: &MarketConfig,
    delta: f64,
) -> Result<NormalSpec> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
    }
    let l = expected_log_growth(params, k, market)?;
    let v = log_return_variance(params, k)?;
    Ok(NormalSpec {
        mean: l * delta,
        variance: v * delta,
    })
}
