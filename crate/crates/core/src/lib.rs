//! Continuous-time Kelly leverage for portfolios of geometric Brownian
//! motions: parameter estimation, growth-optimal and fractional leverage,
//! Monte Carlo simulation, historical backtests and fund diagnostics.
//!
//! ```
//! use kellygrowth::{full_kelly, sharpe_ratio, GbmParams, MarketConfig};
//! use nalgebra::{DMatrix, DVector};
//!
//! let params = GbmParams::from_covariance(
//!     DVector::from_vec(vec![0.079, 0.031]),
//!     &DMatrix::from_row_slice(2, 2, &[0.0396, -0.0093, -0.0093, 0.0152]),
//! )?;
//! let market = MarketConfig::default();
//! let k = full_kelly(&params, &market);
//! assert!((k.as_slice()[0] - 2.89).abs() < 0.05);
//! assert!((sharpe_ratio(&params, &market) - 0.588).abs() < 0.005);
//! # Ok::<(), kellygrowth::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// The matrix types used throughout the public API.
pub use nalgebra;

pub mod backtest;
pub mod cli;
pub mod error;
pub mod estimation;
pub mod fund_eval;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod rng;
pub mod simulation;
pub mod stats;

pub use backtest::{max_drawdown, run_backtest, BacktestReport, CapitalPath, DrawdownRecord};
pub use error::{Error, Result};
pub use estimation::{
    apply_tax_adjustment, daily_log_returns, daily_tax_drag, estimate_gbm_params, InstrumentPanel, LogReturnMatrix,
};
pub use fund_eval::{reverse_engineer, FundEvalResult, ReturnSummary, RiskClass};
pub use model::{
    expected_log_growth, fractional_profile, log_return_variance, predictive_log_return, sharpe_ratio, GbmParams,
    GrowthProfile, LeverageVector, MarketConfig, NormalSpec,
};
pub use optimizer::{
    constrained_kelly, fractional_kelly, full_kelly, kelly_fraction_estimate, optimal_growth, ConstrainedSolution,
    LeverageSpec,
};
pub use simulation::{CapitalMode, SimulationSpec};
