//! Command-line arguments, the optional TOML config file, and their
//! resolution into a [`RunConfig`].
//!
//! Precedence: flags, then the config file, then built-in defaults. The
//! output directory additionally falls back to `KELLYGROWTH_OUT_DIR` before
//! the current directory.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MarketConfig;
use crate::optimizer::LeverageSpec;
use crate::simulation::CapitalMode;

pub const OUT_DIR_ENV: &str = "KELLYGROWTH_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Parser)]
#[command(name = "kellygrowth", version, about = "Kelly leverage, growth profiles, backtests and fund diagnostics")]
pub struct Cli {
    /// TOML file supplying defaults for the global options.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for artifacts [default: $KELLYGROWTH_OUT_DIR, else .]
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Annual risk-free rate [default: 0]
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub risk_free_rate: Option<f64>,

    /// Trading days per year [default: 260]
    #[arg(long, global = true)]
    pub trading_days: Option<u32>,

    /// Per-instrument tax rates on drift, comma separated [default: 0 each]
    #[arg(long, global = true, value_delimiter = ',', value_name = "RATES")]
    pub tax: Option<Vec<f64>>,

    /// Seed for every stochastic step [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Artifact kinds to write [default: json,csv,svg]
    #[arg(long, global = true, value_delimiter = ',')]
    pub formats: Option<Vec<Format>>,

    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Estimate drift, volatility and correlation from daily prices.
    Estimate(EstimateArgs),
    /// Leverage vectors and their growth profiles.
    Optimize(OptimizeArgs),
    /// Replay constant-leverage portfolios on historical prices.
    Backtest(BacktestArgs),
    /// Monte Carlo paths of prices and capital.
    Simulate(SimulateArgs),
    /// Implied Kelly fraction and Sharpe ratio of a fund's returns.
    EvaluateFund(FundArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Price files: one wide file or one `date,adj_close` file per instrument.
    #[arg(long, required = true, num_args = 1..)]
    pub prices: Vec<PathBuf>,

    /// Clip correlation eigenvalues instead of failing on a non positive-definite estimate.
    #[arg(long)]
    pub repair_correlation: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["params", "prices"])))]
pub struct OptimizeArgs {
    /// Parameter JSON (`mu` with `cov` or `sigma` and `corr`), or an estimate report.
    #[arg(long)]
    pub params: Option<PathBuf>,

    /// Estimate parameters from these price files instead.
    #[arg(long, num_args = 1..)]
    pub prices: Vec<PathBuf>,

    /// full-kelly, fractional:<alpha>, constrained:<kappa> or k1,k2,...; repeatable [default: full-kelly]
    #[arg(long, allow_hyphen_values = true)]
    pub leverage: Vec<String>,

    /// Restrict to a single instrument.
    #[arg(long, value_name = "ID")]
    pub marginal: Option<String>,

    /// With --prices: clip correlation eigenvalues instead of failing.
    #[arg(long)]
    pub repair_correlation: bool,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Price files to replay.
    #[arg(long, required = true, num_args = 1..)]
    pub prices: Vec<PathBuf>,

    /// Parameters for resolving Kelly-type leverage [default: estimated from the prices]
    #[arg(long)]
    pub params: Option<PathBuf>,

    /// Leverage specification; repeat for several portfolios.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub leverage: Vec<String>,

    /// Starting capital, any positive number [default: 1]
    #[arg(long)]
    pub initial_capital: Option<f64>,

    /// Clip correlation eigenvalues of the price estimate instead of failing.
    #[arg(long)]
    pub repair_correlation: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Exact,
    Rebalanced,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Parameter JSON, as for `optimize`.
    #[arg(long)]
    pub params: PathBuf,

    /// One leverage specification.
    #[arg(long, default_value = "full-kelly", allow_hyphen_values = true)]
    pub leverage: String,

    /// Horizon in years.
    #[arg(long, default_value_t = 20.0)]
    pub years: f64,

    /// [default: trading days per year]
    #[arg(long)]
    pub steps_per_year: Option<u32>,

    /// Number of capital paths.
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,

    /// exact: log-capital drawn from its normal law; rebalanced: prices simulated, leverage reset every step.
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,

    /// Number of simulated price panels written as CSV.
    #[arg(long, default_value_t = 1)]
    pub emit_panels: usize,

    /// First date of emitted panels (weekdays only).
    #[arg(long, default_value = "2000-01-03", value_parser = parse_date)]
    pub start_date: NaiveDate,
}

#[derive(Debug, Args)]
pub struct FundArgs {
    /// Single-column file of per-period returns.
    #[arg(long)]
    pub returns: PathBuf,

    /// Returns are log-returns (the default).
    #[arg(long, conflicts_with = "simple_returns")]
    pub log_returns: bool,

    /// Returns are simple returns, converted with log(1 + R).
    #[arg(long)]
    pub simple_returns: bool,

    /// Return periods per year (12 for monthly data).
    #[arg(long, default_value_t = 1.0)]
    pub periods_per_year: f64,

    /// Bootstrap replicates; 0 disables the interval.
    #[arg(long, default_value_t = 10_000)]
    pub bootstrap: usize,
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| e.to_string())
}

/// Keys accepted in the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub risk_free_rate: Option<f64>,
    pub trading_days_per_year: Option<u32>,
    pub tax_rates: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub formats: Option<Vec<Format>>,
    pub initial_capital: Option<f64>,
    pub repair_correlation: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() as u64 + 1)
                .unwrap_or(0);
            Error::Parse {
                file: path.to_path_buf(),
                line,
                message: e.message().to_string(),
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledLeverage {
    pub label: String,
    pub spec: LeverageSpec,
}

impl LabeledLeverage {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(Self {
            label: s.trim().to_string(),
            spec: s.parse()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnKind {
    Log,
    Simple,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamsSource {
    File(PathBuf),
    Prices(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Estimate {
        prices: Vec<PathBuf>,
        repair_correlation: bool,
    },
    Optimize {
        source: ParamsSource,
        leverage: Vec<LabeledLeverage>,
        marginal: Option<String>,
        repair_correlation: bool,
    },
    Backtest {
        prices: Vec<PathBuf>,
        params: Option<PathBuf>,
        leverage: Vec<LabeledLeverage>,
        initial_capital: f64,
        repair_correlation: bool,
    },
    Simulate {
        params: PathBuf,
        leverage: LabeledLeverage,
        years: f64,
        steps_per_year: u32,
        paths: usize,
        mode: CapitalMode,
        emit_panels: usize,
        start_date: NaiveDate,
    },
    EvaluateFund {
        returns: PathBuf,
        kind: ReturnKind,
        periods_per_year: f64,
        bootstrap: usize,
    },
}

/// Everything a run needs, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub market: MarketConfig,
    /// `None` means no tax on any instrument.
    pub tax_rates: Option<Vec<f64>>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub formats: Vec<Format>,
}

impl RunConfig {
    /// Merges parsed flags with the config file they name (if any) and the
    /// output-directory environment value.
    pub fn from_cli(cli: Cli, env_out_dir: Option<PathBuf>) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let defaults = MarketConfig::default();
        let market = MarketConfig::new(
            cli.risk_free_rate.or(file.risk_free_rate).unwrap_or(defaults.risk_free_rate()),
            cli.trading_days
                .or(file.trading_days_per_year)
                .unwrap_or(defaults.trading_days_per_year()),
        )?;
        let repair = |flag: bool| flag || file.repair_correlation.unwrap_or(false);
        let parse_all = |specs: &[String]| specs.iter().map(|s| LabeledLeverage::parse(s)).collect::<Result<Vec<_>>>();

        let command = match cli.command {
            CommandArgs::Estimate(a) => Command::Estimate {
                prices: a.prices,
                repair_correlation: repair(a.repair_correlation),
            },
            CommandArgs::Optimize(a) => {
                let mut leverage = parse_all(&a.leverage)?;
                if leverage.is_empty() {
                    leverage.push(LabeledLeverage::parse("full-kelly")?);
                }
                Command::Optimize {
                    source: match a.params {
                        Some(p) => ParamsSource::File(p),
                        None => ParamsSource::Prices(a.prices),
                    },
                    leverage,
                    marginal: a.marginal,
                    repair_correlation: repair(a.repair_correlation),
                }
            }
            CommandArgs::Backtest(a) => Command::Backtest {
                prices: a.prices,
                params: a.params,
                leverage: parse_all(&a.leverage)?,
                initial_capital: a.initial_capital.or(file.initial_capital).unwrap_or(1.0),
                repair_correlation: repair(a.repair_correlation),
            },
            CommandArgs::Simulate(a) => Command::Simulate {
                params: a.params,
                leverage: LabeledLeverage::parse(&a.leverage)?,
                years: a.years,
                steps_per_year: a.steps_per_year.unwrap_or(market.trading_days_per_year()),
                paths: a.paths,
                mode: match a.mode {
                    ModeArg::Exact => CapitalMode::Exact,
                    ModeArg::Rebalanced => CapitalMode::Rebalanced,
                },
                emit_panels: a.emit_panels,
                start_date: a.start_date,
            },
            CommandArgs::EvaluateFund(a) => Command::EvaluateFund {
                returns: a.returns,
                kind: if a.simple_returns { ReturnKind::Simple } else { ReturnKind::Log },
                periods_per_year: a.periods_per_year,
                bootstrap: a.bootstrap,
            },
        };

        Ok(Self {
            command,
            market,
            tax_rates: cli.tax.or(file.tax_rates),
            out_dir: cli
                .out_dir
                .or(file.out_dir)
                .or(env_out_dir)
                .unwrap_or_else(|| PathBuf::from(".")),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            formats: cli
                .formats
                .or(file.formats)
                .unwrap_or_else(|| vec![Format::Json, Format::Csv, Format::Svg]),
        })
    }

    /// Files the command reads.
    pub fn input_paths(&self) -> Vec<&Path> {
        match &self.command {
            Command::Estimate { prices, .. } => prices.iter().map(PathBuf::as_path).collect(),
            Command::Optimize { source, .. } => match source {
                ParamsSource::File(p) => vec![p.as_path()],
                ParamsSource::Prices(ps) => ps.iter().map(PathBuf::as_path).collect(),
            },
            Command::Backtest { prices, params, .. } => {
                prices.iter().map(PathBuf::as_path).chain(params.as_deref()).collect()
            }
            Command::Simulate { params, .. } => vec![params.as_path()],
            Command::EvaluateFund { returns, .. } => vec![returns.as_path()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("kellygrowth").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_beat_file_beat_env() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "risk_free_rate = 0.01\nseed = 9\nout_dir = \"from-file\"\ntax_rates = [0.2, 0.4]\n").unwrap();
        let c = parse(&["--config", cfg.to_str().unwrap(), "--seed", "3", "optimize", "--params", "p.json"]);
        let rc = RunConfig::from_cli(c, Some("from-env".into())).unwrap();
        assert_eq!(rc.seed, 3);
        assert_eq!(rc.market.risk_free_rate(), 0.01);
        assert_eq!(rc.market.trading_days_per_year(), 260);
        assert_eq!(rc.out_dir, PathBuf::from("from-file"));
        assert_eq!(rc.tax_rates, Some(vec![0.2, 0.4]));

        let rc = RunConfig::from_cli(parse(&["optimize", "--params", "p.json"]), Some("from-env".into())).unwrap();
        assert_eq!(rc.out_dir, PathBuf::from("from-env"));
        assert_eq!(rc.seed, 0);
        let rc = RunConfig::from_cli(parse(&["optimize", "--params", "p.json"]), None).unwrap();
        assert_eq!(rc.out_dir, PathBuf::from("."));
    }

    #[test]
    fn leverage_parsing_and_defaults() {
        let rc = RunConfig::from_cli(parse(&["optimize", "--params", "p.json"]), None).unwrap();
        match rc.command {
            Command::Optimize { leverage, .. } => assert_eq!(leverage[0].spec, LeverageSpec::FullKelly),
            other => panic!("{other:?}"),
        }
        let c = parse(&["backtest", "--prices", "a.csv", "--leverage", "-0.5,1", "--leverage", "fractional:0.3"]);
        match RunConfig::from_cli(c, None).unwrap().command {
            Command::Backtest { leverage, .. } => {
                assert_eq!(leverage[0].spec, LeverageSpec::Explicit { k: vec![-0.5, 1.0] });
                assert_eq!(leverage[1].spec, LeverageSpec::Fractional { alpha: 0.3 });
            }
            other => panic!("{other:?}"),
        }
        let c = parse(&["backtest", "--prices", "a.csv", "--leverage", "half"]);
        assert!(matches!(RunConfig::from_cli(c, None), Err(Error::Config(_))));
    }

    #[test]
    fn usage_errors() {
        assert!(Cli::try_parse_from(["kellygrowth", "optimize"]).is_err());
        assert!(Cli::try_parse_from(["kellygrowth", "evaluate-fund", "--returns", "r", "--log-returns", "--simple-returns"]).is_err());
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "seed = 1\nbogus = 2\n").unwrap();
        let c = parse(&["--config", cfg.to_str().unwrap(), "optimize", "--params", "p.json"]);
        assert!(matches!(RunConfig::from_cli(c, None), Err(Error::Parse { line: 2, .. })));
    }
}
