//! JSON report documents. Every top-level report carries `schema_version`.

use std::path::Path;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::backtest::DrawdownRecord;
use crate::error::{Error, Result};
use crate::fund_eval::{BootstrapInterval, FundEvalResult, ReturnSummary};
use crate::model::{GbmParams, GrowthProfile, MarketConfig};
use crate::simulation::MonteCarloSummary;

use super::args::ReturnKind;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(what: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("`{what}` must be a square matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Model parameters on disk. Reading accepts `mu` with either `sigma` and
/// `corr` (preferred when both are present) or `cov`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instrument_ids: Option<Vec<String>>,
    pub mu: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corr: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<Vec<Vec<f64>>>,
}

impl ParamsDoc {
    pub fn from_params(instrument_ids: &[String], params: &GbmParams) -> Self {
        Self {
            instrument_ids: Some(instrument_ids.to_vec()),
            mu: params.mu().iter().copied().collect(),
            sigma: Some(params.sigma().iter().copied().collect()),
            corr: Some(rows(params.corr())),
            cov: Some(rows(params.cov())),
        }
    }

    /// Instrument ids (`x1, x2, ...` when absent) and validated parameters.
    pub fn to_params(&self) -> Result<(Vec<String>, GbmParams)> {
        let mu = DVector::from_vec(self.mu.clone());
        let params = match (&self.sigma, &self.corr, &self.cov) {
            (Some(s), Some(c), _) => GbmParams::new(mu, DVector::from_vec(s.clone()), matrix("corr", c)?)?,
            (_, _, Some(c)) => GbmParams::from_covariance(mu, &matrix("cov", c)?)?,
            _ => return Err(Error::Config("parameters need `cov`, or `sigma` and `corr`".into())),
        };
        let ids = match &self.instrument_ids {
            Some(ids) if ids.len() == params.dim() => ids.clone(),
            Some(ids) => {
                return Err(Error::DimensionMismatch {
                    what: "instrument_ids",
                    expected: params.dim(),
                    got: ids.len(),
                })
            }
            None => (1..=params.dim()).map(|i| format!("x{i}")).collect(),
        };
        Ok((ids, params))
    }
}

/// Reads a parameter file. An estimate report is accepted too, in which case
/// its post-tax parameters are used.
pub fn load_params(path: &Path) -> Result<(Vec<String>, GbmParams)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |e: serde_json::Error| Error::Parse {
        file: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    };
    let mut value: serde_json::Value = serde_json::from_slice(&bytes).map_err(parse_err)?;
    if let Some(post) = value.get_mut("post_tax") {
        value = post.take();
    }
    let doc: ParamsDoc = serde_json::from_value(value).map_err(parse_err)?;
    doc.to_params()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedRows {
    pub instrument: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub schema_version: u32,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub n_prices: usize,
    pub n_returns: usize,
    pub dropped_rows: Vec<DroppedRows>,
    pub market: MarketConfig,
    pub tax_rates: Vec<f64>,
    pub repaired_correlation: bool,
    pub pre_tax: ParamsDoc,
    pub post_tax: ParamsDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioRow {
    pub label: String,
    pub k: Vec<f64>,
    pub kappa: f64,
    /// Lagrange multiplier, constrained portfolios only.
    pub lambda: Option<f64>,
    pub profile: GrowthProfile,
    pub log_return_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub schema_version: u32,
    pub instrument_ids: Vec<String>,
    pub market: MarketConfig,
    pub tax_rates: Vec<f64>,
    pub mu: Vec<f64>,
    pub sharpe: f64,
    pub full_kelly: Vec<f64>,
    pub optimal_growth: GrowthProfile,
    pub portfolios: Vec<PortfolioRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestRun {
    pub label: String,
    pub k: Vec<f64>,
    pub kappa: f64,
    /// Implied Kelly fraction, when parameters were available and `k` is a
    /// multiple of the full-Kelly vector.
    pub kelly_fraction: Option<f64>,
    pub annualized_log_growth: f64,
    pub annualized_log_sd: f64,
    pub final_value: f64,
    pub max_drawdown: DrawdownRecord,
    pub ruined_on: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestDoc {
    pub schema_version: u32,
    pub instrument_ids: Vec<String>,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub market: MarketConfig,
    pub tax_rates: Vec<f64>,
    pub daily_drift_adjust: Vec<f64>,
    pub initial_capital: f64,
    pub runs: Vec<BacktestRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationDoc {
    pub schema_version: u32,
    pub instrument_ids: Vec<String>,
    pub seed: u64,
    pub market: MarketConfig,
    pub leverage: String,
    pub k: Vec<f64>,
    pub kappa: f64,
    pub steps_per_year: u32,
    pub n_steps: usize,
    pub summary: MonteCarloSummary,
    pub panels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FundDoc {
    pub schema_version: u32,
    pub input_returns: ReturnKind,
    pub market: MarketConfig,
    pub summary: ReturnSummary,
    pub result: FundEvalResult,
    pub bootstrap: Option<BootstrapInterval>,
    pub seed: u64,
}
