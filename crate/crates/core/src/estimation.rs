//! Method-of-moments estimation of GBM parameters from daily closing prices.
//!
//! With `D_{t,j}` the daily log-returns (`N = n - 1` rows), `D̄_j` their mean
//! and `T` trading days per year:
//!
//! ```text
//! σ̂²_j  = T / (N - 1) · Σ_t (D_{t,j} - D̄_j)²
//! μ̂_j   = T · D̄_j + σ̂²_j / 2
//! R̂_jk  = T / (σ̂_j σ̂_k (N - 1)) · Σ_t (D_{t,j} - D̄_j)(D_{t,k} - D̄_k)
//! ```
//!
//! `N - 1` equals `n - 2` in terms of the number of price rows.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linalg::{compensated_sum, repair_correlation, CORRELATION_EIGEN_FLOOR};
use crate::model::{GbmParams, MarketConfig};

/// Aligned daily closing prices, one column per instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentPanel {
    instrument_ids: Vec<String>,
    dates: Vec<NaiveDate>,
    prices: DMatrix<f64>,
}

impl InstrumentPanel {
    /// `prices` is `dates.len() × instrument_ids.len()`.
    pub fn new(instrument_ids: Vec<String>, dates: Vec<NaiveDate>, prices: DMatrix<f64>) -> Result<Self> {
        if instrument_ids.is_empty() {
            return Err(Error::invalid("instrument_ids", "at least one instrument is required"));
        }
        check_len("price rows", dates.len(), prices.nrows())?;
        check_len("price columns", instrument_ids.len(), prices.ncols())?;
        if dates.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "{} dates; at least 3 are required",
                dates.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "dates",
                format!("not strictly increasing at {} -> {}", w[0], w[1]),
            ));
        }
        for j in 0..prices.ncols() {
            for t in 0..prices.nrows() {
                let p = prices[(t, j)];
                if !(p > 0.0) || !p.is_finite() {
                    return Err(Error::NonPositivePrice {
                        instrument: instrument_ids[j].clone(),
                        date: dates[t].to_string(),
                        price: p,
                    });
                }
            }
        }
        Ok(Self {
            instrument_ids,
            dates,
            prices,
        })
    }

    /// Joins per-instrument series on the intersection of their dates and
    /// validates the result.
    pub fn align(series: Vec<PriceSeries>) -> Result<(Self, Vec<usize>)> {
        let a = align_series(series)?;
        Ok((Self::new(a.instrument_ids, a.dates, a.prices)?, a.dropped_rows))
    }

    pub fn instrument_ids(&self) -> &[String] {
        &self.instrument_ids
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &DMatrix<f64> {
        &self.prices
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_instruments(&self) -> usize {
        self.instrument_ids.len()
    }

    /// Same prices with every date moved by `days`.
    pub fn shifted(&self, days: i64) -> Self {
        let delta = chrono::Duration::days(days);
        Self {
            dates: self.dates.iter().map(|d| *d + delta).collect(),
            ..self.clone()
        }
    }
}

/// One instrument's dated prices, before alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub id: String,
    pub points: Vec<(NaiveDate, f64)>,
}

/// Series joined on their common dates, before panel validation.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPrices {
    pub instrument_ids: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// `dates.len() × instrument_ids.len()`.
    pub prices: DMatrix<f64>,
    /// Per input series, rows dropped because some other series had no
    /// price on that date.
    pub dropped_rows: Vec<usize>,
}

pub fn align_series(series: Vec<PriceSeries>) -> Result<AlignedPrices> {
    if series.is_empty() {
        return Err(Error::invalid("series", "at least one series is required"));
    }
    let mut common: BTreeSet<NaiveDate> = series[0].points.iter().map(|(d, _)| *d).collect();
    for s in &series[1..] {
        let dates: BTreeSet<NaiveDate> = s.points.iter().map(|(d, _)| *d).collect();
        common = common.intersection(&dates).copied().collect();
    }
    let dates: Vec<NaiveDate> = common.into_iter().collect();
    let mut prices = DMatrix::zeros(dates.len(), series.len());
    let mut dropped_rows = Vec::with_capacity(series.len());
    for (j, s) in series.iter().enumerate() {
        let mut kept = 0;
        let mut seen = BTreeSet::new();
        for (d, p) in &s.points {
            if !seen.insert(*d) {
                return Err(Error::invalid(
                    "dates",
                    format!("duplicate date {d} in series `{}`", s.id),
                ));
            }
            if let Ok(t) = dates.binary_search(d) {
                prices[(t, j)] = *p;
                kept += 1;
            }
        }
        dropped_rows.push(s.points.len() - kept);
    }
    Ok(AlignedPrices {
        instrument_ids: series.into_iter().map(|s| s.id).collect(),
        dates,
        prices,
        dropped_rows,
    })
}

/// Daily log-returns `D_{t,j} = log P_{t+1,j} - log P_{t,j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogReturnMatrix {
    instrument_ids: Vec<String>,
    returns: DMatrix<f64>,
}

impl LogReturnMatrix {
    pub fn new(instrument_ids: Vec<String>, returns: DMatrix<f64>) -> Result<Self> {
        check_len("return columns", instrument_ids.len(), returns.ncols())?;
        if returns.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("returns", "all log-returns must be finite"));
        }
        Ok(Self {
            instrument_ids,
            returns,
        })
    }

    pub fn instrument_ids(&self) -> &[String] {
        &self.instrument_ids
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn n_observations(&self) -> usize {
        self.returns.nrows()
    }
}

pub fn daily_log_returns(panel: &InstrumentPanel) -> LogReturnMatrix {
    let p = panel.prices();
    let returns = DMatrix::from_fn(p.nrows() - 1, p.ncols(), |t, j| {
        p[(t + 1, j)].ln() - p[(t, j)].ln()
    });
    LogReturnMatrix {
        instrument_ids: panel.instrument_ids().to_vec(),
        returns,
    }
}

/// Raw moment estimates before any positive-definiteness check.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimates {
    pub mu: DVector<f64>,
    pub sigma: DVector<f64>,
    pub corr: DMatrix<f64>,
    /// Sample mean of each column of daily log-returns.
    pub daily_mean: DVector<f64>,
}

pub fn sample_moments(returns: &LogReturnMatrix, market: &MarketConfig) -> Result<MomentEstimates> {
    let d = returns.returns();
    let n_obs = d.nrows();
    let m = d.ncols();
    if n_obs < 2 {
        return Err(Error::InsufficientData(format!(
            "{n_obs} daily returns; at least 2 are required"
        )));
    }
    let t = f64::from(market.trading_days_per_year());
    let dof = (n_obs - 1) as f64;

    let means = DVector::from_fn(m, |j, _| compensated_sum(d.column(j).iter().copied()) / n_obs as f64);
    let dev = DMatrix::from_fn(n_obs, m, |i, j| d[(i, j)] - means[j]);

    let mut sigma = DVector::zeros(m);
    let mut mu = DVector::zeros(m);
    for j in 0..m {
        let ss = compensated_sum(dev.column(j).iter().map(|x| x * x));
        if ss == 0.0 {
            return Err(Error::ZeroVariance(returns.instrument_ids()[j].clone()));
        }
        let var = t * ss / dof;
        sigma[j] = var.sqrt();
        mu[j] = t * means[j] + 0.5 * var;
    }

    let mut corr = DMatrix::identity(m, m);
    for j in 0..m {
        for k in 0..j {
            let cross = compensated_sum(dev.column(j).iter().zip(dev.column(k).iter()).map(|(a, b)| a * b));
            let r = (t * cross / (sigma[j] * sigma[k] * dof)).clamp(-1.0, 1.0);
            corr[(j, k)] = r;
            corr[(k, j)] = r;
        }
    }

    Ok(MomentEstimates {
        mu,
        sigma,
        corr,
        daily_mean: means,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimationOptions {
    /// Replace a non positive-definite correlation estimate with the nearest
    /// correlation matrix (eigenvalues clipped at 1e-8) instead of failing.
    pub repair_correlation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbmEstimate {
    pub params: GbmParams,
    pub repaired: bool,
}

/// Method-of-moments GBM parameters; fails if the correlation estimate is
/// not positive definite.
pub fn estimate_gbm_params(returns: &LogReturnMatrix, market: &MarketConfig) -> Result<GbmParams> {
    estimate_gbm_params_with(returns, market, EstimationOptions::default()).map(|e| e.params)
}

pub fn estimate_gbm_params_with(
    returns: &LogReturnMatrix,
    market: &MarketConfig,
    options: EstimationOptions,
) -> Result<GbmEstimate> {
    let mom = sample_moments(returns, market)?;
    match GbmParams::new(mom.mu.clone(), mom.sigma.clone(), mom.corr.clone()) {
        Ok(params) => Ok(GbmEstimate {
            params,
            repaired: false,
        }),
        Err(Error::NotPositiveDefinite { .. } | Error::IllConditioned { .. }) if options.repair_correlation => {
            let corr = repair_correlation(&mom.corr, CORRELATION_EIGEN_FLOOR);
            Ok(GbmEstimate {
                params: GbmParams::new(mom.mu, mom.sigma, corr)?,
                repaired: true,
            })
        }
        Err(e) => Err(e),
    }
}

/// Scales each drift by one minus the instrument's tax rate. Volatility and
/// correlation are untouched.
pub fn apply_tax_adjustment(params: &GbmParams, tax_rates: &[f64]) -> Result<GbmParams> {
    check_tax_rates(params.dim(), tax_rates)?;
    let mu = DVector::from_fn(params.dim(), |j, _| params.mu()[j] * (1.0 - tax_rates[j]));
    params.with_mu(mu)
}

/// Daily log-drift removed from each instrument when replaying history with
/// taxed drift: `tax_j · μ_j / T`, where `μ` is the pre-tax drift.
pub fn daily_tax_drag(pre_tax: &GbmParams, tax_rates: &[f64], market: &MarketConfig) -> Result<Vec<f64>> {
    check_tax_rates(pre_tax.dim(), tax_rates)?;
    let t = f64::from(market.trading_days_per_year());
    Ok(pre_tax
        .mu()
        .iter()
        .zip(tax_rates)
        .map(|(mu, tax)| tax * mu / t)
        .collect())
}

fn check_tax_rates(m: usize, tax_rates: &[f64]) -> Result<()> {
    check_len("tax rates", m, tax_rates.len())?;
    if let Some(r) = tax_rates.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return Err(Error::invalid("tax_rates", format!("rate {r} is outside [0, 1)")));
    }
    Ok(())
}
