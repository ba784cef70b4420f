//! Command-line front end: ingestion, configuration, subcommands and
//! artifact emission.

pub mod args;
pub mod ingest;
pub mod json;
pub mod plot;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;

use crate::backtest::{run_backtest, BacktestReport};
use crate::error::{Error, Result};
use crate::estimation::{
    apply_tax_adjustment, daily_log_returns, daily_tax_drag, estimate_gbm_params_with, EstimationOptions,
    InstrumentPanel,
};
use crate::fund_eval::{bootstrap_interval, reverse_engineer, simple_to_log_returns, summarize_returns};
use crate::model::{GbmParams, LeverageVector, MarketConfig};
use crate::optimizer::{full_kelly, growth_profile, kelly_fraction_estimate, optimal_growth};
use crate::simulation::{
    price_panel, simulate_price_paths, simulate_terminal_capital, summarize_terminal, SimulationSpec,
};

pub use args::{Cli, Command, Format, LabeledLeverage, ParamsSource, ReturnKind, RunConfig, OUT_DIR_ENV};
pub use json::SCHEMA_VERSION;

use report::*;

/// An output file, fully rendered before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub format: Format,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(name: impl Into<String>, format: Format, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            format,
            bytes,
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
/// Written paths go to stdout, diagnostics to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let outcome = RunConfig::from_cli(cli, env_out).and_then(|c| run(&c));
    match outcome {
        Ok(paths) => {
            let mut out = std::io::stdout().lock();
            for p in paths {
                let _ = writeln!(out, "{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command and writes its artifacts atomically. Returns the paths
/// written.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    validate_inputs(config)?;
    let (artifacts, outcome) = render(config)?;
    let written = write_artifacts(&config.out_dir, &artifacts, &config.formats)?;
    outcome.map(|_| written)
}

fn validate_inputs(config: &RunConfig) -> Result<()> {
    for p in config.input_paths() {
        let meta = std::fs::metadata(p).map_err(|e| Error::io(p, e))?;
        if !meta.is_file() {
            return Err(Error::io(
                p,
                std::io::Error::new(std::io::ErrorKind::InvalidInput, "not a regular file"),
            ));
        }
    }
    Ok(())
}

/// Computes every artifact of a run without touching the output directory.
/// The second value is an error to report after the artifacts are written
/// (every simulated or replayed portfolio was ruined).
pub fn render(config: &RunConfig) -> Result<(Vec<Artifact>, Result<()>)> {
    match &config.command {
        Command::Estimate {
            prices,
            repair_correlation,
        } => estimate(config, prices, *repair_correlation).map(|a| (a, Ok(()))),
        Command::Optimize {
            source,
            leverage,
            marginal,
            repair_correlation,
        } => optimize(config, source, leverage, marginal.as_deref(), *repair_correlation).map(|a| (a, Ok(()))),
        Command::Backtest {
            prices,
            params,
            leverage,
            initial_capital,
            repair_correlation,
        } => backtest(config, prices, params.as_deref(), leverage, *initial_capital, *repair_correlation),
        Command::Simulate { .. } => simulate(config),
        Command::EvaluateFund {
            returns,
            kind,
            periods_per_year,
            bootstrap,
        } => evaluate_fund(config, returns, *kind, *periods_per_year, *bootstrap).map(|a| (a, Ok(()))),
    }
}

/// Writes each artifact of an enabled format to a temporary file in
/// `out_dir` and renames it into place.
pub fn write_artifacts(out_dir: &Path, artifacts: &[Artifact], formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for a in artifacts.iter().filter(|a| formats.contains(&a.format)) {
        let dest = out_dir.join(&a.name);
        let mut tmp = tempfile::Builder::new()
            .prefix(".kellygrowth-")
            .tempfile_in(out_dir)
            .map_err(|e| Error::io(out_dir, e))?;
        tmp.write_all(&a.bytes).map_err(|e| Error::io(tmp.path(), e))?;
        tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&dest).map_err(|e| Error::io(&dest, e.error))?;
        written.push(dest);
    }
    Ok(written)
}

fn tax_rates(config: &RunConfig, m: usize) -> Result<Vec<f64>> {
    let rates = config.tax_rates.clone().unwrap_or_else(|| vec![0.0; m]);
    if rates.len() != m {
        return Err(Error::DimensionMismatch {
            what: "tax rates",
            expected: m,
            got: rates.len(),
        });
    }
    Ok(rates)
}

fn load_panel(paths: &[PathBuf]) -> Result<(InstrumentPanel, Vec<DroppedRows>)> {
    let ingested = ingest::ingest_panel(paths)?;
    let dropped = ingested
        .dropped_rows
        .into_iter()
        .map(|(instrument, rows)| DroppedRows { instrument, rows })
        .collect();
    Ok((ingested.panel, dropped))
}

fn estimate_panel(panel: &InstrumentPanel, market: &MarketConfig, repair: bool) -> Result<(GbmParams, bool)> {
    let est = estimate_gbm_params_with(
        &daily_log_returns(panel),
        market,
        EstimationOptions {
            repair_correlation: repair,
        },
    )?;
    Ok((est.params, est.repaired))
}

fn estimate(config: &RunConfig, prices: &[PathBuf], repair: bool) -> Result<Vec<Artifact>> {
    let (panel, dropped_rows) = load_panel(prices)?;
    let taxes = tax_rates(config, panel.n_instruments())?;
    let (pre, repaired) = estimate_panel(&panel, &config.market, repair)?;
    let post = apply_tax_adjustment(&pre, &taxes)?;
    let ids = panel.instrument_ids();
    let doc = EstimateReport {
        schema_version: SCHEMA_VERSION,
        first_date: panel.dates()[0],
        last_date: *panel.dates().last().expect("panel has dates"),
        n_prices: panel.n_dates(),
        n_returns: panel.n_dates() - 1,
        dropped_rows,
        market: config.market,
        tax_rates: taxes,
        repaired_correlation: repaired,
        pre_tax: ParamsDoc::from_params(ids, &pre),
        post_tax: ParamsDoc::from_params(ids, &post),
    };
    Ok(vec![Artifact::new("estimate.json", Format::Json, json::to_json_bytes(&doc)?)])
}

/// Post-tax parameters from a file or from price data.
fn resolve_params(config: &RunConfig, source: &ParamsSource, repair: bool) -> Result<(Vec<String>, GbmParams)> {
    let (ids, pre) = match source {
        ParamsSource::File(p) => report::load_params(p)?,
        ParamsSource::Prices(ps) => {
            let (panel, _) = load_panel(ps)?;
            let (params, _) = estimate_panel(&panel, &config.market, repair)?;
            (panel.instrument_ids().to_vec(), params)
        }
    };
    let taxes = tax_rates(config, pre.dim())?;
    Ok((ids, apply_tax_adjustment(&pre, &taxes)?))
}

fn optimize(
    config: &RunConfig,
    source: &ParamsSource,
    leverage: &[LabeledLeverage],
    marginal: Option<&str>,
    repair: bool,
) -> Result<Vec<Artifact>> {
    let (mut ids, mut params) = resolve_params(config, source, repair)?;
    let taxes = tax_rates(config, params.dim())?;
    if let Some(id) = marginal {
        let j = ids
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| Error::Config(format!("unknown instrument `{id}` for --marginal")))?;
        params = params.marginal(j)?;
        ids = vec![id.to_string()];
    }
    let market = &config.market;
    let portfolios = leverage
        .iter()
        .map(|l| {
            let (k, lambda) = l.spec.resolve(&params, market)?;
            let profile = growth_profile(&params, &k, market)?;
            Ok(PortfolioRow {
                label: l.label.clone(),
                k: k.as_slice().to_vec(),
                kappa: k.kappa(),
                lambda,
                log_return_sd: profile.log_return_sd(),
                profile,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let optimal = optimal_growth(&params, market);
    let doc = OptimizeReport {
        schema_version: SCHEMA_VERSION,
        instrument_ids: ids,
        market: *market,
        tax_rates: taxes,
        mu: params.mu().iter().copied().collect(),
        sharpe: optimal.sharpe,
        full_kelly: full_kelly(&params, market).as_slice().to_vec(),
        optimal_growth: optimal,
        portfolios,
    };
    Ok(vec![Artifact::new("optimize.json", Format::Json, json::to_json_bytes(&doc)?)])
}

fn backtest(
    config: &RunConfig,
    prices: &[PathBuf],
    params_file: Option<&Path>,
    leverage: &[LabeledLeverage],
    initial_capital: f64,
    repair: bool,
) -> Result<(Vec<Artifact>, Result<()>)> {
    let market = &config.market;
    let (panel, _) = load_panel(prices)?;
    let m = panel.n_instruments();
    let taxes = tax_rates(config, m)?;
    let taxed = taxes.iter().any(|t| *t != 0.0);
    let needs_params = leverage.iter().any(|l| l.spec.needs_params());

    // the panel's own pre-tax estimate drives the tax drag, and the leverage
    // resolution when no parameter file is given
    let panel_estimate = estimate_panel(&panel, market, repair).map(|(p, _)| p);
    let pre_tax = match panel_estimate {
        Ok(p) => Some(p),
        Err(e) if taxed || (needs_params && params_file.is_none()) => return Err(e),
        Err(_) => None,
    };
    let drift = match (&pre_tax, taxed) {
        (Some(p), true) => daily_tax_drag(p, &taxes, market)?,
        _ => vec![0.0; m],
    };
    let model = match params_file {
        Some(path) => {
            let (ids, p) = report::load_params(path)?;
            crate::error::check_len("parameter instruments", m, ids.len())?;
            Some(apply_tax_adjustment(&p, &taxes)?)
        }
        None => pre_tax.as_ref().map(|p| apply_tax_adjustment(p, &taxes)).transpose()?,
    };

    let resolved = leverage
        .iter()
        .map(|l| match &model {
            Some(p) => l.spec.resolve(p, market).map(|(k, _)| k),
            None => l.spec.resolve_explicit(m),
        })
        .collect::<Result<Vec<LeverageVector>>>()?;
    let reports: Vec<BacktestReport> = resolved
        .par_iter()
        .map(|k| run_backtest(&panel, k, market, &drift, initial_capital))
        .collect::<Result<_>>()?;

    let runs: Vec<BacktestRun> = leverage
        .iter()
        .zip(&resolved)
        .zip(&reports)
        .map(|((l, k), r)| BacktestRun {
            label: l.label.clone(),
            k: k.as_slice().to_vec(),
            kappa: k.kappa(),
            kelly_fraction: model.as_ref().and_then(|p| kelly_fraction_estimate(k, p, market)),
            annualized_log_growth: r.annualized_log_growth,
            annualized_log_sd: r.annualized_log_sd,
            final_value: r.final_value,
            max_drawdown: r.max_drawdown,
            ruined_on: r.ruined_on,
        })
        .collect();
    let all_ruined = runs.iter().all(|r| r.ruined_on.is_some());
    let doc = BacktestDoc {
        schema_version: SCHEMA_VERSION,
        instrument_ids: panel.instrument_ids().to_vec(),
        first_date: panel.dates()[0],
        last_date: *panel.dates().last().expect("panel has dates"),
        market: *market,
        tax_rates: taxes,
        daily_drift_adjust: drift,
        initial_capital,
        runs,
    };

    let labels: Vec<String> = leverage.iter().map(|l| l.label.clone()).collect();
    let paths: Vec<_> = reports.iter().map(|r| &r.path).collect();
    let series = |with_band: bool| -> Vec<plot::Series<'_>> {
        reports
            .iter()
            .zip(&labels)
            .map(|(r, label)| plot::Series {
                label,
                values: &r.path.values,
                drawdown: with_band.then_some((r.max_drawdown.peak_index, r.max_drawdown.trough_index)),
            })
            .collect()
    };
    let artifacts = vec![
        Artifact::new("backtest.json", Format::Json, json::to_json_bytes(&doc)?),
        Artifact::new("capital.csv", Format::Csv, ingest::capital_paths_to_csv(&labels, &paths)),
        Artifact::new(
            "capital.svg",
            Format::Svg,
            plot::line_chart("Capital", panel.dates(), &series(false), plot::Scale::Linear).into_bytes(),
        ),
        Artifact::new(
            "log_capital.svg",
            Format::Svg,
            plot::line_chart("Capital (log scale)", panel.dates(), &series(true), plot::Scale::Log).into_bytes(),
        ),
    ];
    let outcome = if all_ruined {
        Err(Error::Ruined(format!("{} backtest portfolio(s)", reports.len())))
    } else {
        Ok(())
    };
    Ok((artifacts, outcome))
}

fn simulate(config: &RunConfig) -> Result<(Vec<Artifact>, Result<()>)> {
    let Command::Simulate {
        params,
        leverage,
        years,
        steps_per_year,
        paths,
        mode,
        emit_panels,
        start_date,
    } = &config.command
    else {
        unreachable!("simulate called with another command")
    };
    let (ids, params) = resolve_params(config, &ParamsSource::File(params.clone()), false)?;
    let (k, _) = leverage.spec.resolve(&params, &config.market)?;
    let spec = SimulationSpec {
        params,
        leverage: k,
        market: config.market,
        horizon_years: *years,
        steps_per_year: *steps_per_year,
        n_paths: *paths,
        seed: config.seed,
    };
    spec.validate()?;

    let terminal = simulate_terminal_capital(&spec, *mode)?;
    let summary = summarize_terminal(&spec, *mode, &terminal)?;

    // path i depends only on (seed, i), so the first few paths of a smaller
    // run are the same as in the full run
    let mut artifacts = Vec::new();
    let mut panel_names = Vec::new();
    let emit = (*emit_panels).min(*paths);
    if emit > 0 {
        let panel_spec = SimulationSpec {
            n_paths: emit,
            ..spec.clone()
        };
        for (i, prices) in simulate_price_paths(&panel_spec)?.iter().enumerate() {
            let panel = price_panel(prices, ids.clone(), *start_date)?;
            let name = format!("panel_{i:03}.csv");
            artifacts.push(Artifact::new(name.clone(), Format::Csv, ingest::panel_to_csv(&panel)));
            panel_names.push(name);
        }
    }
    let doc = SimulationDoc {
        schema_version: SCHEMA_VERSION,
        instrument_ids: ids,
        seed: config.seed,
        market: config.market,
        leverage: leverage.label.clone(),
        k: spec.leverage.as_slice().to_vec(),
        kappa: spec.leverage.kappa(),
        steps_per_year: spec.steps_per_year,
        n_steps: spec.n_steps(),
        summary,
        panels: panel_names,
    };
    artifacts.insert(0, Artifact::new("simulation.json", Format::Json, json::to_json_bytes(&doc)?));
    let outcome = if summary.ruined_paths == summary.n_paths {
        Err(Error::Ruined(format!("{} simulated path(s)", summary.n_paths)))
    } else {
        Ok(())
    };
    Ok((artifacts, outcome))
}

fn evaluate_fund(
    config: &RunConfig,
    returns: &Path,
    kind: ReturnKind,
    periods_per_year: f64,
    replicates: usize,
) -> Result<Vec<Artifact>> {
    let raw = ingest::read_returns(returns)?;
    let logs = match kind {
        ReturnKind::Log => raw,
        ReturnKind::Simple => simple_to_log_returns(&raw)?,
    };
    let summary = summarize_returns(&logs, periods_per_year)?;
    let result = reverse_engineer(&summary, &config.market)?;
    let bootstrap = match replicates {
        0 => None,
        n => Some(bootstrap_interval(&summary, &config.market, n, config.seed)?),
    };
    let doc = FundDoc {
        schema_version: SCHEMA_VERSION,
        input_returns: kind,
        market: config.market,
        summary,
        result,
        bootstrap,
        seed: config.seed,
    };
    Ok(vec![Artifact::new("fund.json", Format::Json, json::to_json_bytes(&doc)?)])
}
