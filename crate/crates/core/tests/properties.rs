mod common;

use common::*;
use kellygrowth::backtest::drawdown_indices;
use kellygrowth::fund_eval::{reverse_engineer, ReturnSummary};
use kellygrowth::nalgebra::{DMatrix, DVector};
use kellygrowth::optimizer::growth_profile;
use kellygrowth::{
    constrained_kelly, expected_log_growth, fractional_kelly, fractional_profile, full_kelly, log_return_variance,
    sharpe_ratio, GbmParams, LeverageVector, MarketConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance() -> impl Strategy<Value = (GbmParams, MarketConfig)> {
    (1usize..=6, any::<u64>(), -0.05f64..0.08).prop_map(|(m, seed, r)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (random_params(&mut rng, m), MarketConfig::new(r, 260).unwrap())
    })
}

fn brute_force_drawdown(v: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..v.len() {
        for j in i..v.len() {
            best = best.max(1.0 - v[j] / v[i]);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fractional_kelly_obeys_growth_identity((p, m) in instance(), alpha in 0.0f64..3.0) {
        let k = fractional_kelly(&p, &m, alpha).unwrap();
        let s = sharpe_ratio(&p, &m);
        let r = m.risk_free_rate();
        let l = expected_log_growth(&p, &k, &m).unwrap();
        let v = log_return_variance(&p, &k).unwrap();
        let l_want = r + (alpha - alpha * alpha / 2.0) * s * s;
        let v_want = alpha * alpha * s * s;
        prop_assert!((l - l_want).abs() <= 1e-9 * l_want.abs().max(1e-3), "{l} vs {l_want}");
        prop_assert!((v - v_want).abs() <= 1e-9 * v_want.max(1e-12), "{v} vs {v_want}");
    }

    #[test]
    fn full_kelly_is_a_stationary_maximum((p, m) in instance(), seed in any::<u64>()) {
        let k = full_kelly(&p, &m);
        let grad = p.excess_drift(&m) - p.cov() * k.as_vector();
        let scale = p.excess_drift(&m).amax().max(1.0);
        prop_assert!(grad.amax() <= 1e-9 * scale, "gradient {}", grad.amax());
        let l0 = expected_log_growth(&p, &k, &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let d = DVector::from_fn(p.dim(), |_, _| rng.random_range(-1.0..1.0));
            let kk = LeverageVector::new(k.as_vector() + d * 1e-3);
            prop_assert!(expected_log_growth(&p, &kk, &m).unwrap() <= l0 + 1e-15);
        }
    }

    #[test]
    fn growth_along_a_ray_peaks_at_the_projection((p, m) in instance(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir = DVector::from_fn(p.dim(), |_, _| rng.random_range(-1.0..1.0));
        let k_star = full_kelly(&p, &m);
        // maximizer of c ↦ L(c·d): c* = dᵀΣk* / dᵀΣd
        let sd = p.cov() * &dir;
        let c_star = sd.dot(k_star.as_vector()) / sd.dot(&dir);
        let at = |c: f64| growth_by_definition(&p, (&dir * c).as_slice(), m.risk_free_rate());
        let h = 1e-2 * c_star.abs().max(1.0);
        prop_assert!(at(c_star) >= at(c_star + h) && at(c_star) >= at(c_star - h));
        // concave: midpoint above the chord
        prop_assert!(at(c_star + h / 2.0) >= 0.5 * (at(c_star) + at(c_star + h)) - 1e-15);
    }

    #[test]
    fn constrained_solution_dominates_feasible_vectors((p, m) in instance(), kappa in -1.0f64..4.0, seed in any::<u64>()) {
        let sol = constrained_kelly(&p, &m, kappa).unwrap();
        prop_assert!((sol.k.kappa() - kappa).abs() < 1e-9);
        let best = expected_log_growth(&p, &sol.k, &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = p.dim();
        for _ in 0..1000 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let shift = (v.iter().sum::<f64>() - kappa) / n as f64;
            v.iter_mut().for_each(|x| *x -= shift);
            let l = expected_log_growth(&p, &LeverageVector::from(v), &m).unwrap();
            prop_assert!(l <= best + 1e-12 * best.abs().max(1.0));
        }
    }

    #[test]
    fn fractional_profiles_agree((p, m) in instance(), alpha in 0.01f64..2.5) {
        let k = fractional_kelly(&p, &m, alpha).unwrap();
        let via_k = growth_profile(&p, &k, &m).unwrap();
        let direct = fractional_profile(sharpe_ratio(&p, &m), alpha, &m).unwrap();
        prop_assert!(rel_err(via_k.expected_log_growth, direct.expected_log_growth) < 1e-9
            || (via_k.expected_log_growth - direct.expected_log_growth).abs() < 1e-12);
        prop_assert!(rel_err(via_k.log_return_variance, direct.log_return_variance) < 1e-9
            || direct.log_return_variance < 1e-14);
        prop_assert_eq!(via_k.over_kelly, direct.over_kelly);
        if let Some(a) = via_k.kelly_fraction {
            prop_assert!((a - alpha).abs() < 1e-6 * alpha.max(1.0));
        }
    }

    #[test]
    fn sharpe_scales_with_square_root_of_time((p, m) in instance(), c in 0.01f64..100.0) {
        let s = sharpe_ratio(&p, &m);
        let scaled = GbmParams::from_covariance(p.mu() * c, &(p.cov() * c)).unwrap();
        let mc = MarketConfig::new(m.risk_free_rate() * c, 260).unwrap();
        let sc = sharpe_ratio(&scaled, &mc);
        prop_assert!((sc - s * c.sqrt()).abs() <= 1e-9 * (s * c.sqrt()).max(1e-9));
    }

    #[test]
    fn drawdown_matches_brute_force(v in prop::collection::vec(0.01f64..100.0, 1..500)) {
        let (f, peak, trough) = drawdown_indices(&v).unwrap();
        prop_assert!((f - brute_force_drawdown(&v)).abs() < 1e-15);
        prop_assert!(peak <= trough);
        if f > 0.0 {
            prop_assert!((1.0 - v[trough] / v[peak] - f).abs() < 1e-15);
        }
    }

    #[test]
    fn drawdown_is_scale_invariant(v in prop::collection::vec(0.01f64..100.0, 1..200), c in 1e-3f64..1e3) {
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        let a = drawdown_indices(&v).unwrap();
        let b = drawdown_indices(&scaled).unwrap();
        prop_assert!((a.0 - b.0).abs() < 1e-12);
    }

    #[test]
    fn fund_inversion_round_trips(s in 0.01f64..5.0, alpha in 0.01f64..1.99, r in -0.05f64..0.1) {
        let m = MarketConfig::new(r, 260).unwrap();
        let g = fractional_profile(s, alpha, &m).unwrap();
        let summary = ReturnSummary {
            mean_log_return: g.expected_log_growth,
            log_return_variance: g.log_return_variance,
            n_observations: 10,
            periods_per_year: 1.0,
        };
        let back = reverse_engineer(&summary, &m).unwrap();
        prop_assert!((back.alpha - alpha).abs() <= 1e-10 * alpha.max(1.0), "{} vs {alpha}", back.alpha);
        prop_assert!((back.sharpe - s).abs() <= 1e-10 * s.max(1.0), "{} vs {s}", back.sharpe);
    }

    #[test]
    fn implied_fraction_is_monotone(l in 0.01f64..1.0, v in 0.001f64..1.0, dv in 1e-6f64..0.5, dl in 1e-6f64..0.5) {
        let m = MarketConfig::default();
        let alpha = |l: f64, v: f64| {
            reverse_engineer(&ReturnSummary { mean_log_return: l, log_return_variance: v, n_observations: 2, periods_per_year: 1.0 }, &m)
                .unwrap()
                .alpha
        };
        prop_assert!(alpha(l, v + dv) > alpha(l, v));
        prop_assert!(alpha(l + dl, v) < alpha(l, v));
    }
}

#[test]
fn backtest_capital_scales_with_initial_capital() {
    use kellygrowth::estimation::InstrumentPanel;
    use kellygrowth::run_backtest;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 300;
    let mut prices = DMatrix::zeros(n, 2);
    let (mut a, mut b) = (100.0, 50.0);
    for t in 0..n {
        prices[(t, 0)] = a;
        prices[(t, 1)] = b;
        a *= 1.0 + rng.random_range(-0.03..0.03);
        b *= 1.0 + rng.random_range(-0.01..0.01);
    }
    let d0 = chrono::NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    let dates = (0..n).map(|i| d0 + chrono::Duration::days(i as i64)).collect();
    let panel = InstrumentPanel::new(vec!["a".into(), "b".into()], dates, prices).unwrap();
    let k = LeverageVector::from(vec![1.5, 0.7]);
    let m = zero_rate();
    let one = run_backtest(&panel, &k, &m, &[0.0, 0.0], 1.0).unwrap();
    let c = 100_000.0;
    let big = run_backtest(&panel, &k, &m, &[0.0, 0.0], c).unwrap();
    for (x, y) in one.path.values.iter().zip(&big.path.values) {
        assert!((y - c * x).abs() <= 1e-12 * y);
    }
    assert_eq!(one.annualized_log_growth, big.annualized_log_growth);
    assert_eq!(one.annualized_log_sd, big.annualized_log_sd);
    assert!((one.max_drawdown.fraction - big.max_drawdown.fraction).abs() < 1e-14);

    let flat = run_backtest(&panel, &LeverageVector::zeros(2), &m, &[0.0, 0.0], 7.0).unwrap();
    assert!(flat.path.values.iter().all(|v| *v == 7.0));
}
