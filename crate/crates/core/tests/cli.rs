mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use kellygrowth::cli::ingest::ingest_panel;
use kellygrowth::fund_eval::summarize_returns;
use kellygrowth::simulation::{price_panel, simulate_price_paths};
use kellygrowth::{full_kelly, optimal_growth, reverse_engineer, sharpe_ratio, SimulationSpec};
use serde_json::Value;

fn kellygrowth(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kellygrowth"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("KELLYGROWTH_OUT_DIR")
        .output()
        .unwrap()
}

fn ok(out: &Path, args: &[&str]) {
    let o = kellygrowth(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn optimize_reports_full_kelly_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let params = data("post_tax_params.json");
    ok(dir.path(), &["optimize", "--params", params.to_str().unwrap(), "--leverage", "full-kelly"]);
    let doc = read_json(dir.path().join("optimize.json"));
    assert_eq!(doc["schema_version"], 1);

    let p = post_tax();
    let m = zero_rate();
    let k = full_kelly(&p, &m);
    let k_out: Vec<f64> = doc["full_kelly"].as_array().unwrap().iter().map(num).collect();
    assert_eq!(k_out, k.as_slice());
    assert!((k_out[0] - 2.89).abs() < 0.05 && (k_out[1] - 3.78).abs() < 0.05);
    assert_eq!(num(&doc["sharpe"]), sharpe_ratio(&p, &m));
    assert!((num(&doc["sharpe"]) - 0.588).abs() < 0.005);
    let l = num(&doc["optimal_growth"]["expected_log_growth"]);
    assert_eq!(l, optimal_growth(&p, &m).expected_log_growth);
    assert!((l - 0.172).abs() < 0.003);
    let row = &doc["portfolios"][0];
    assert_eq!(row["label"], "full-kelly");
    assert_eq!(num(&row["profile"]["kelly_fraction"]), 1.0);
}

#[test]
fn evaluate_fund_inverts_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let returns = data("fund_31y_synthetic.csv");
    ok(dir.path(), &["--seed", "5", "evaluate-fund", "--returns", returns.to_str().unwrap(), "--log-returns", "--bootstrap", "200"]);
    let doc = read_json(dir.path().join("fund.json"));
    let alpha = num(&doc["result"]["alpha"]);
    let s = num(&doc["result"]["sharpe"]);
    assert!((0.066..=0.072).contains(&alpha), "alpha {alpha}");
    assert!((2.66..=2.77).contains(&s), "sharpe {s}");

    let xs = kellygrowth::cli::ingest::read_returns(&returns).unwrap();
    let direct = reverse_engineer(&summarize_returns(&xs, 1.0).unwrap(), &zero_rate()).unwrap();
    assert_eq!(alpha, direct.alpha);
    assert_eq!(s, direct.sharpe);
}

fn simulate(out: &Path, threads: &str) -> Output {
    let params = data("pre_tax_params.json");
    Command::new(env!("CARGO_BIN_EXE_kellygrowth"))
        .args(["--seed", "7", "--out-dir"])
        .arg(out)
        .args(["simulate", "--params", params.to_str().unwrap(), "--leverage", "fractional:0.5"])
        .args(["--years", "2", "--paths", "200", "--emit-panels", "2"])
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .unwrap()
}

#[test]
fn simulate_is_reproducible_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "1"), (&c, "3")] {
        let o = simulate(dir.path(), threads);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let names = listing(a.path());
    assert_eq!(names, vec!["panel_000.csv", "panel_001.csv", "simulation.json"]);
    for other in [&b, &c] {
        assert_eq!(listing(other.path()), names);
        for n in &names {
            assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(other.path().join(n)).unwrap(), "{n}");
        }
    }

    // the emitted panel is exactly the library's first simulated path
    let ids = vec!["equity".to_string(), "bonds".to_string()];
    let p = pre_tax();
    let k = kellygrowth::fractional_kelly(&p, &zero_rate(), 0.5).unwrap();
    let spec = SimulationSpec {
        params: p,
        leverage: k,
        market: zero_rate(),
        horizon_years: 2.0,
        steps_per_year: 260,
        n_paths: 1,
        seed: 7,
    };
    let prices = simulate_price_paths(&spec).unwrap().remove(0);
    let want = price_panel(&prices, ids, chrono::NaiveDate::from_ymd_opt(2000, 1, 3).unwrap()).unwrap();
    let got = ingest_panel(&[a.path().join("panel_000.csv")]).unwrap();
    assert_eq!(got.panel, want);
}

#[test]
fn estimate_then_backtest_a_simulated_panel() {
    let sim = tempfile::tempdir().unwrap();
    let params = data("pre_tax_params.json");
    ok(sim.path(), &["--seed", "1", "simulate", "--params", params.to_str().unwrap(), "--years", "3", "--paths", "1"]);
    let panel = sim.path().join("panel_000.csv");

    let out = tempfile::tempdir().unwrap();
    ok(out.path(), &["--tax", "0.2,0.4", "estimate", "--prices", panel.to_str().unwrap()]);
    let est = read_json(out.path().join("estimate.json"));
    let pre = num(&est["pre_tax"]["mu"][0]);
    assert!((num(&est["post_tax"]["mu"][0]) - 0.8 * pre).abs() < 1e-15);
    assert_eq!(est["n_prices"], 3 * 260 + 1);

    ok(
        out.path(),
        &[
            "--tax", "0.2,0.4",
            "backtest", "--prices", panel.to_str().unwrap(),
            "--params", params.to_str().unwrap(),
            "--leverage", "fractional:0.3", "--leverage", "1,0", "--initial-capital", "100000",
        ],
    );
    let names = listing(out.path());
    assert_eq!(names, vec!["backtest.json", "capital.csv", "capital.svg", "estimate.json", "log_capital.svg"]);
    let bt = read_json(out.path().join("backtest.json"));
    assert_eq!(bt["runs"].as_array().unwrap().len(), 2);
    assert!((num(&bt["runs"][0]["kelly_fraction"]) - 0.3).abs() < 1e-12);
    let csv = fs::read_to_string(out.path().join("capital.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3 * 260 + 2);
    assert!(fs::read_to_string(out.path().join("log_capital.svg")).unwrap().contains("<polyline"));

    let only_json = tempfile::tempdir().unwrap();
    ok(
        only_json.path(),
        &["--formats", "json", "backtest", "--prices", panel.to_str().unwrap(), "--leverage", "full-kelly"],
    );
    assert_eq!(listing(only_json.path()), vec!["backtest.json"]);
}

#[test]
fn exit_codes_and_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();

    let o = kellygrowth(&out, &["optimize", "--params", "/definitely/missing.json"]);
    assert_eq!(o.status.code(), Some(4));

    let bad_csv = dir.path().join("bad.csv");
    fs::write(&bad_csv, "date,a\n2020-01-01,1.0\n2020-01-02,oops\n2020-01-03,1.2\n").unwrap();
    let o = kellygrowth(&out, &["estimate", "--prices", bad_csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.csv:3"), "{}", String::from_utf8_lossy(&o.stderr));

    let o = kellygrowth(&out, &["optimize", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));

    let not_pd = dir.path().join("np.json");
    fs::write(&not_pd, r#"{"mu":[0.1,0.2],"sigma":[0.2,0.3],"corr":[[1,0.99],[0.99,-1]]}"#).unwrap();
    let o = kellygrowth(&out, &["optimize", "--params", not_pd.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    assert!(listing(&out).is_empty(), "failed runs left {:?}", listing(&out));
}
