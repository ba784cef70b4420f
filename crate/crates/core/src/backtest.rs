//! Historical replay of a constant-leverage policy on a price panel.
//!
//! Every trading day the portfolio is rebalanced back to the fixed fractions
//! `k`, with the cash (or debt) balance `1 - κ` accruing `e^{r/T} - 1`.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::estimation::InstrumentPanel;
use crate::model::{LeverageVector, MarketConfig};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapitalPath {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub initial_capital: f64,
}

impl CapitalPath {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        check_len("capital values", dates.len(), values.len())?;
        let initial_capital = *values
            .first()
            .ok_or_else(|| Error::InsufficientData("empty capital path".into()))?;
        if !(initial_capital > 0.0) {
            return Err(Error::invalid("initial_capital", "must be positive"));
        }
        Ok(Self {
            dates,
            values,
            initial_capital,
        })
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }
}

/// Largest peak-to-trough loss, with the trough at or after the peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawdownRecord {
    /// `1 - A_trough / A_peak`, in `[0, 1]`.
    pub fraction: f64,
    pub peak_index: usize,
    pub trough_index: usize,
    pub peak_date: NaiveDate,
    pub trough_date: NaiveDate,
}

/// Single pass over the path keeping the running maximum. Ties go to the
/// earliest peak, then the earliest trough.
pub fn max_drawdown(path: &CapitalPath) -> Result<DrawdownRecord> {
    let (fraction, peak_index, trough_index) = drawdown_indices(&path.values)?;
    Ok(DrawdownRecord {
        fraction,
        peak_index,
        trough_index,
        peak_date: path.dates[peak_index],
        trough_date: path.dates[trough_index],
    })
}

/// `(fraction, peak index, trough index)` of the maximum drawdown of a
/// series of positive values (zeros are allowed after the first entry).
pub fn drawdown_indices(values: &[f64]) -> Result<(f64, usize, usize)> {
    if values.is_empty() {
        return Err(Error::InsufficientData("empty capital path".into()));
    }
    let mut running_peak = 0;
    let mut best = (0.0, 0, 0);
    for (t, &v) in values.iter().enumerate() {
        if v > values[running_peak] {
            running_peak = t;
        }
        let dd = 1.0 - v / values[running_peak];
        if dd > best.0 {
            best = (dd, running_peak, t);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub path: CapitalPath,
    /// `L̂ = T · mean(log A_{t+1} / A_t)`.
    pub annualized_log_growth: f64,
    /// `V̂^{1/2}`, with `V̂ = T · var(log A_{t+1} / A_t)` (divisor `N - 1`).
    pub annualized_log_sd: f64,
    pub max_drawdown: DrawdownRecord,
    pub final_value: f64,
    /// Date on which capital reached zero or below; the path is frozen at
    /// zero from then on and the growth statistics cover only prior days.
    pub ruined_on: Option<NaiveDate>,
}

/// Replays `panel` under constant leverage `k`.
///
/// `daily_drift_adjust[j]` is subtracted from every daily log-return of
/// instrument `j` before it is applied (a daily tax drag, typically
/// `tax_j · μ_j / T`).
pub fn run_backtest(
    panel: &InstrumentPanel,
    k: &LeverageVector,
    market: &MarketConfig,
    daily_drift_adjust: &[f64],
    initial_capital: f64,
) -> Result<BacktestReport> {
    let m = panel.n_instruments();
    check_len("leverage", m, k.len())?;
    check_len("daily drift adjustment", m, daily_drift_adjust.len())?;
    if !(initial_capital > 0.0) || !initial_capital.is_finite() {
        return Err(Error::invalid("initial_capital", "must be positive"));
    }
    let t_year = f64::from(market.trading_days_per_year());
    let cash = (1.0 - k.kappa()) * (market.risk_free_rate() / t_year).exp_m1();
    let prices = panel.prices();
    let n = panel.n_dates();

    let mut values = Vec::with_capacity(n);
    values.push(initial_capital);
    let mut log_ratios = Vec::with_capacity(n - 1);
    let mut ruined_on = None;
    let mut capital = initial_capital;
    for t in 0..n - 1 {
        if ruined_on.is_some() {
            values.push(0.0);
            continue;
        }
        let mut growth = 1.0 + cash;
        for j in 0..m {
            let d = prices[(t + 1, j)].ln() - prices[(t, j)].ln() - daily_drift_adjust[j];
            growth += k.as_slice()[j] * d.exp_m1();
        }
        if growth <= 0.0 {
            ruined_on = Some(panel.dates()[t + 1]);
            capital = 0.0;
        } else {
            capital *= growth;
            log_ratios.push(growth.ln());
        }
        values.push(capital);
    }

    let (l_hat, sd_hat) = annualized_stats(&log_ratios, t_year);
    let path = CapitalPath::new(panel.dates().to_vec(), values)?;
    let max_drawdown = max_drawdown(&path)?;
    Ok(BacktestReport {
        final_value: path.final_value(),
        path,
        annualized_log_growth: l_hat,
        annualized_log_sd: sd_hat,
        max_drawdown,
        ruined_on,
    })
}

/// `(T · mean, sqrt(T · sample variance))` of daily log-ratios.
pub fn annualized_stats(log_ratios: &[f64], trading_days_per_year: f64) -> (f64, f64) {
    match log_ratios.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (trading_days_per_year * log_ratios[0], f64::NAN),
        _ => (
            trading_days_per_year * stats::mean(log_ratios),
            (trading_days_per_year * stats::sample_variance(log_ratios)).sqrt(),
        ),
    }
}
