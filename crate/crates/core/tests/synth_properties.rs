use std::collections::BTreeMap;

use powersharing::econometrics::{fit_ols, RegressionSpec};
use powersharing::model::{thresholds, ModelParams};
use powersharing::synth::{generate, truth_report, DgpMode, QuadraticDgp, Range, SizeDynamics, SynthConfig};
use proptest::prelude::*;

fn small_config() -> impl Strategy<Value = SynthConfig> {
    (1usize..12, 1usize..5, 0usize..3, 1usize..8, any::<u64>(), any::<bool>(), 0.05f64..1.0).prop_map(
        |(countries, gmin, extra, periods, seed, quadratic, sigma)| SynthConfig {
            n_countries: countries,
            groups_per_country: (gmin, gmin + extra),
            n_periods: periods,
            noise_sigma: sigma,
            seed,
            mode: if quadratic { DgpMode::Quadratic(QuadraticDgp::default()) } else { DgpMode::Model },
            ..SynthConfig::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_seed_same_bytes(cfg in small_config()) {
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.panel.write_csv(&mut ca).unwrap();
        b.panel.write_csv(&mut cb).unwrap();
        prop_assert_eq!(ca, cb);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sizes_valid_and_shares_bounded(cfg in small_config()) {
        let s = generate(&cfg).unwrap();
        let mut sums: BTreeMap<(String, i64), f64> = BTreeMap::new();
        for r in &s.panel.rows {
            prop_assert!(r.size > 0.0 && r.size < 1.0);
            *sums.entry((r.country_id.clone(), r.period)).or_default() += r.size;
        }
        prop_assert!(sums.values().all(|&v| v <= 1.0));
        prop_assert!(s.panel.validate().is_ok());
    }
}

#[test]
fn noiseless_quadratic_without_effects_is_recovered() {
    let q = QuadraticDgp { country_period_fe_sd: 0.0, group_fe_sd: 0.0, ..QuadraticDgp::default() };
    let cfg = SynthConfig { n_countries: 30, noise_sigma: 0.0, mode: DgpMode::Quadratic(q), seed: 3, ..SynthConfig::default() };
    let s = generate(&cfg).unwrap();
    for column in [1, 2, 3, 4] {
        let fit = fit_ols(&s.panel, &RegressionSpec::ladder(column).unwrap()).unwrap();
        assert!((fit.beta1() - 2.0).abs() < 1e-6, "column {column}: {}", fit.beta1());
        assert!((fit.beta2() + 2.0).abs() < 1e-6, "column {column}: {}", fit.beta2());
    }
    assert_eq!(truth_report(&s).unwrap().true_peak, Some(0.5));
}

#[test]
fn model_mode_truth_report_gives_delta_star() {
    let s = generate(&SynthConfig { n_countries: 5, ..SynthConfig::default() }).unwrap();
    let r = truth_report(&s).unwrap();
    assert!((r.delta_star.unwrap() - 0.683_772_233_983_162).abs() < 1e-12);
}

/// Share of rows at the top access score per tenth of the size range, with
/// the binomial standard error of each share.
fn binned_high_share(cfg: &SynthConfig) -> Vec<Option<(f64, f64)>> {
    let s = generate(cfg).unwrap();
    let mut bins = vec![(0usize, 0usize); 10];
    for r in &s.panel.rows {
        let b = ((r.size * 10.0) as usize).min(9);
        bins[b].0 += 1;
        bins[b].1 += usize::from(r.access == 2.0);
    }
    bins.into_iter()
        .map(|(n, k)| {
            (n >= 400).then(|| {
                let p = k as f64 / n as f64;
                (p, (p * (1.0 - p) / n as f64).sqrt().max(1e-3))
            })
        })
        .collect()
}

fn wide_sizes(gamma: f64) -> SynthConfig {
    let mut cfg = SynthConfig {
        n_countries: 3000,
        groups_per_country: (1, 1),
        n_periods: 10,
        size_dynamics: SizeDynamics { dominant_weight: 0.4, volatility: 0.6, ..SizeDynamics::default() },
        seed: 17,
        ..SynthConfig::default()
    };
    cfg.params_prior.gamma = Range::fixed(gamma);
    cfg
}

#[test]
fn high_score_share_single_peaked_under_proportional_rules() {
    let bins = binned_high_share(&wide_sizes(1.0));
    let filled: Vec<(usize, f64, f64)> = bins.iter().enumerate().filter_map(|(i, b)| b.map(|(p, se)| (i, p, se))).collect();
    assert!(filled.len() >= 8, "too few populated bins: {bins:?}");
    let top = filled.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    // Rising up to the top bin and falling after it, up to sampling noise.
    for w in filled.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slack = 3.0 * (a.2 * a.2 + b.2 * b.2).sqrt();
        if b.0 <= top.0 {
            assert!(b.1 >= a.1 - slack, "dip before the peak: {bins:?}");
        } else {
            assert!(b.1 <= a.1 + slack, "rise after the peak: {bins:?}");
        }
    }
    let ds = thresholds(&ModelParams::proportional(0.5, 0.1).unwrap()).unwrap().delta_star;
    let peak_bin = (ds * 10.0) as usize;
    assert!(top.0.abs_diff(peak_bin) <= 2, "top bin {} vs {peak_bin}: {bins:?}", top.0);
}

#[test]
fn high_score_share_weakly_increasing_below_switch() {
    let bins = binned_high_share(&wide_sizes(0.9));
    let filled: Vec<(f64, f64)> = bins.iter().flatten().copied().collect();
    assert!(filled.len() >= 8, "too few populated bins: {bins:?}");
    for w in filled.windows(2) {
        let slack = 3.0 * (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt();
        assert!(w[1].0 >= w[0].0 - slack, "{bins:?}");
    }
}

#[test]
fn invalid_configs_rejected() {
    assert!(generate(&SynthConfig { n_countries: 0, ..SynthConfig::default() }).is_err());
    assert!(generate(&SynthConfig { noise_sigma: 0.0, ..SynthConfig::default() }).is_err());
    assert!(generate(&SynthConfig { groups_per_country: (3, 2), ..SynthConfig::default() }).is_err());
}
