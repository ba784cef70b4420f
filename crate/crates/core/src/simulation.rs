//! Seeded Monte Carlo paths for correlated GBM prices and leveraged capital.
//!
//! Each step of length `δ` draws log-price increments exactly from
//! `N((μ - σ²/2) δ, Σ δ)` using the Cholesky factor of `Σ`, so prices carry
//! no discretization bias. Path `i` always draws from substream `i` of the
//! master seed.

use chrono::{Datelike, NaiveDate, Weekday};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::estimation::InstrumentPanel;
use crate::model::{expected_log_growth, log_return_variance, GbmParams, LeverageVector, MarketConfig};
use crate::rng::substream;
use crate::stats;

/// Largest log-price (or log-capital) magnitude before a path is rejected.
pub const LOG_OVERFLOW_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub params: GbmParams,
    pub leverage: LeverageVector,
    pub market: MarketConfig,
    pub horizon_years: f64,
    pub steps_per_year: u32,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon_years > 0.0) || !self.horizon_years.is_finite() {
            return Err(Error::invalid("horizon_years", "must be positive"));
        }
        if self.steps_per_year < 1 {
            return Err(Error::invalid("steps_per_year", "must be at least 1"));
        }
        if self.n_paths < 1 {
            return Err(Error::invalid("n_paths", "must be at least 1"));
        }
        if self.n_steps() < 1 {
            return Err(Error::invalid("horizon_years", "shorter than one step"));
        }
        check_len("leverage", self.params.dim(), self.leverage.len())
    }

    /// Number of steps, `horizon × steps_per_year` rounded to an integer.
    pub fn n_steps(&self) -> usize {
        (self.horizon_years * f64::from(self.steps_per_year)).round() as usize
    }

    /// Step length in years.
    pub fn dt(&self) -> f64 {
        1.0 / f64::from(self.steps_per_year)
    }
}

/// How leveraged capital evolves between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapitalMode {
    /// Log-capital increments drawn from the continuous-time law
    /// `N(L(k) δ, V(k) δ)`.
    Exact,
    /// Prices are simulated and the portfolio is rebalanced to `k` at every
    /// step: `A ← A (1 + (1 - κ)(e^{rδ} - 1) + Σ_j k_j (P'_j / P_j - 1))`.
    Rebalanced,
}

/// One simulated capital trajectory, `A_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCapital {
    pub values: Vec<f64>,
    /// First step at which capital was wiped out; values stay zero afterwards.
    pub ruined_at: Option<usize>,
}

/// Terminal state of a path, for large runs where whole paths are not kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalCapital {
    /// `log A_T`; negative infinity for a ruined path.
    pub log_capital: f64,
    pub ruined_at: Option<usize>,
}

struct PriceStepper<'a> {
    lower: &'a DMatrix<f64>,
    drift: DVector<f64>,
    sqrt_dt: f64,
    z: DVector<f64>,
    increment: DVector<f64>,
}

impl<'a> PriceStepper<'a> {
    fn new(params: &'a GbmParams, dt: f64) -> Self {
        let m = params.dim();
        let drift = DVector::from_fn(m, |j, _| {
            let s = params.sigma()[j];
            (params.mu()[j] - 0.5 * s * s) * dt
        });
        Self {
            lower: params.cholesky().lower(),
            drift,
            sqrt_dt: dt.sqrt(),
            z: DVector::zeros(m),
            increment: DVector::zeros(m),
        }
    }

    /// Draws the next vector of log-price increments.
    fn step(&mut self, rng: &mut ChaCha8Rng) -> &DVector<f64> {
        for zj in self.z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        self.increment.copy_from(&self.drift);
        self.increment.gemv(self.sqrt_dt, self.lower, &self.z, 1.0);
        &self.increment
    }
}

fn price_path(spec: &SimulationSpec, index: usize) -> Result<DMatrix<f64>> {
    let n = spec.n_steps();
    let m = spec.params.dim();
    let mut rng = substream(spec.seed, index as u64);
    let mut stepper = PriceStepper::new(&spec.params, spec.dt());
    let mut log_p = DVector::<f64>::zeros(m);
    let mut out = DMatrix::from_element(n + 1, m, 1.0);
    for t in 1..=n {
        log_p += stepper.step(&mut rng);
        if log_p.iter().any(|v| v.abs() > LOG_OVERFLOW_LIMIT) {
            return Err(Error::Overflow { path: index, step: t });
        }
        for j in 0..m {
            out[(t, j)] = log_p[j].exp();
        }
    }
    Ok(out)
}

/// Simulates `n_paths` price paths, each an `(n_steps + 1) × m` matrix with
/// a first row of ones.
pub fn simulate_price_paths(spec: &SimulationSpec) -> Result<Vec<DMatrix<f64>>> {
    spec.validate()?;
    (0..spec.n_paths)
        .into_par_iter()
        .map(|i| price_path(spec, i))
        .collect()
}

/// Walks one capital path, calling `record(step, value)` after every step.
fn capital_walk(
    spec: &SimulationSpec,
    mode: CapitalMode,
    index: usize,
    mut record: impl FnMut(f64),
) -> Result<TerminalCapital> {
    let n = spec.n_steps();
    let dt = spec.dt();
    let mut rng = substream(spec.seed, index as u64);
    match mode {
        CapitalMode::Exact => {
            let l = expected_log_growth(&spec.params, &spec.leverage, &spec.market)?;
            let v = log_return_variance(&spec.params, &spec.leverage)?;
            let drift = l * dt;
            let scale = (v * dt).sqrt();
            let mut log_a = 0.0_f64;
            for t in 1..=n {
                let z: f64 = rng.sample(StandardNormal);
                log_a += drift + scale * z;
                if log_a.abs() > LOG_OVERFLOW_LIMIT {
                    return Err(Error::Overflow { path: index, step: t });
                }
                record(log_a.exp());
            }
            Ok(TerminalCapital {
                log_capital: log_a,
                ruined_at: None,
            })
        }
        CapitalMode::Rebalanced => {
            let k = spec.leverage.as_vector();
            let cash = (1.0 - spec.leverage.kappa()) * (spec.market.risk_free_rate() * dt).exp_m1();
            let mut stepper = PriceStepper::new(&spec.params, dt);
            let mut log_a = 0.0_f64;
            let mut ruined_at = None;
            for t in 1..=n {
                let x = stepper.step(&mut rng);
                if ruined_at.is_some() {
                    record(0.0);
                    continue;
                }
                let growth = 1.0 + cash + k.iter().zip(x.iter()).map(|(kj, xj)| kj * xj.exp_m1()).sum::<f64>();
                if growth <= 0.0 {
                    ruined_at = Some(t);
                    log_a = f64::NEG_INFINITY;
                    record(0.0);
                    continue;
                }
                log_a += growth.ln();
                if log_a.abs() > LOG_OVERFLOW_LIMIT {
                    return Err(Error::Overflow { path: index, step: t });
                }
                record(log_a.exp());
            }
            Ok(TerminalCapital {
                log_capital: log_a,
                ruined_at,
            })
        }
    }
}

/// Simulates full capital trajectories (`n_steps + 1` values starting at 1).
pub fn simulate_capital_paths(spec: &SimulationSpec, mode: CapitalMode) -> Result<Vec<SimulatedCapital>> {
    spec.validate()?;
    (0..spec.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut values = Vec::with_capacity(spec.n_steps() + 1);
            values.push(1.0);
            let end = capital_walk(spec, mode, i, |v| values.push(v))?;
            Ok(SimulatedCapital {
                values,
                ruined_at: end.ruined_at,
            })
        })
        .collect()
}

/// Like [`simulate_capital_paths`] but keeps only terminal log-capital.
pub fn simulate_terminal_capital(spec: &SimulationSpec, mode: CapitalMode) -> Result<Vec<TerminalCapital>> {
    spec.validate()?;
    (0..spec.n_paths)
        .into_par_iter()
        .map(|i| capital_walk(spec, mode, i, |_| {}))
        .collect()
}

/// Sample statistics of terminal log-capital next to the continuous-time law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub mode: CapitalMode,
    pub n_paths: usize,
    pub horizon_years: f64,
    pub theoretical_log_growth: f64,
    pub theoretical_log_variance: f64,
    /// Mean of `log A_T / T` over surviving paths.
    pub sample_log_growth: f64,
    /// Variance of `log A_T` divided by `T`, over surviving paths.
    pub sample_log_variance: f64,
    pub ruined_paths: usize,
    pub terminal_capital_p05: f64,
    pub terminal_capital_median: f64,
    pub terminal_capital_p95: f64,
}

pub fn summarize_terminal(
    spec: &SimulationSpec,
    mode: CapitalMode,
    terminal: &[TerminalCapital],
) -> Result<MonteCarloSummary> {
    let survivors: Vec<f64> = terminal
        .iter()
        .filter(|t| t.ruined_at.is_none())
        .map(|t| t.log_capital)
        .collect();
    let horizon = spec.n_steps() as f64 * spec.dt();
    let (growth, var) = match survivors.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (survivors[0] / horizon, f64::NAN),
        _ => (stats::mean(&survivors) / horizon, stats::sample_variance(&survivors) / horizon),
    };
    let capital: Vec<f64> = terminal.iter().map(|t| t.log_capital.exp()).collect();
    Ok(MonteCarloSummary {
        mode,
        n_paths: terminal.len(),
        horizon_years: horizon,
        theoretical_log_growth: expected_log_growth(&spec.params, &spec.leverage, &spec.market)?,
        theoretical_log_variance: log_return_variance(&spec.params, &spec.leverage)?,
        sample_log_growth: growth,
        sample_log_variance: var,
        ruined_paths: terminal.len() - survivors.len(),
        terminal_capital_p05: stats::percentile(&capital, 0.05),
        terminal_capital_median: stats::percentile(&capital, 0.5),
        terminal_capital_p95: stats::percentile(&capital, 0.95),
    })
}

/// Dated panel from one simulated price path, one row per weekday starting
/// at `start` (moved forward to a weekday if needed).
pub fn price_panel(prices: &DMatrix<f64>, instrument_ids: Vec<String>, start: NaiveDate) -> Result<InstrumentPanel> {
    let mut dates = Vec::with_capacity(prices.nrows());
    let mut d = start;
    while dates.len() < prices.nrows() {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(d);
        }
        d = d.succ_opt().ok_or_else(|| Error::invalid("start", "date range overflow"))?;
    }
    InstrumentPanel::new(instrument_ids, dates, prices.clone())
}
