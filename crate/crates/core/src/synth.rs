//! Synthetic group x country x period panels with known ground truth.
//!
//! Two generating processes are available. In [`DgpMode::Model`] each
//! country draws contest parameters and the access outcome is a noisy
//! monotone map of the net sharing advantage `h(size)`:
//!
//! ```text
//! latent = Phi(h / sigma + e),  e ~ N(0, 1)
//! access = [latent > 1/3] + [latent > 2/3]      (0, 1 or 2)
//! ```
//!
//! so `sigma` scales the payoff shock. In [`DgpMode::Quadratic`] the outcome is
//! the quadratic panel equation with drawn country x period and group effects.
//!
//! Group sizes follow a mean-reverting AR(1) in log-odds around their initial
//! Dirichlet draw, reflected at `[floor, 1 - floor]`. Every country runs on
//! its own sub-seed derived from the master seed.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{gamma_star, h_value, thresholds, ModelParams};
use crate::panel::{Panel, PanelObservation};

const MAX_SHARE_RETRIES: usize = 1000;

/// Inclusive uniform range; `lo == hi` pins the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamsPrior {
    pub lambda: Range,
    pub a1: Range,
    pub gamma: Range,
}

impl Default for ParamsPrior {
    fn default() -> Self {
        Self { lambda: Range::fixed(0.5), a1: Range::fixed(0.1), gamma: Range::fixed(1.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeDynamics {
    /// AR(1) persistence of log-odds around the group's initial level.
    pub rho: f64,
    /// Per-period drift in log-odds.
    pub drift: f64,
    /// Standard deviation of the per-period log-odds shock.
    pub volatility: f64,
    /// Dirichlet weight of the residual (incumbent) slot in the initial draw.
    pub dominant_weight: f64,
    /// Reflection margin: sizes stay in `[floor, 1 - floor]`.
    pub floor: f64,
}

impl Default for SizeDynamics {
    fn default() -> Self {
        Self { rho: 0.9, drift: 0.0, volatility: 0.3, dominant_weight: 1.0, floor: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticDgp {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Standard deviation of the country x period effects; 0 disables them.
    pub country_period_fe_sd: f64,
    /// Standard deviation of the group effects; 0 disables them.
    pub group_fe_sd: f64,
}

impl Default for QuadraticDgp {
    fn default() -> Self {
        Self { alpha: 1.0, beta1: 2.0, beta2: -2.0, country_period_fe_sd: 0.5, group_fe_sd: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DgpMode {
    Model,
    Quadratic(QuadraticDgp),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub n_countries: usize,
    /// Inclusive range of groups drawn per country.
    pub groups_per_country: (usize, usize),
    pub n_periods: usize,
    pub params_prior: ParamsPrior,
    pub size_dynamics: SizeDynamics,
    pub noise_sigma: f64,
    pub seed: u64,
    pub mode: DgpMode,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_countries: 200,
            groups_per_country: (1, 4),
            n_periods: 20,
            params_prior: ParamsPrior::default(),
            size_dynamics: SizeDynamics::default(),
            noise_sigma: 0.35,
            seed: 0,
            mode: DgpMode::Model,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        let (gmin, gmax) = self.groups_per_country;
        if self.n_countries == 0 || self.n_periods == 0 || gmin == 0 {
            return bad("counts must be at least 1");
        }
        if gmin > gmax {
            return bad("groups_per_country range is empty");
        }
        match self.mode {
            DgpMode::Model if !(self.noise_sigma > 0.0) => return bad("noise_sigma must be positive in model mode"),
            DgpMode::Quadratic(q) if !(self.noise_sigma >= 0.0) || q.country_period_fe_sd < 0.0 || q.group_fe_sd < 0.0 => {
                return bad("noise and effect scales must be non-negative");
            }
            _ => {}
        }
        let d = &self.size_dynamics;
        if !(d.rho.abs() < 1.0) || d.volatility < 0.0 || !(d.dominant_weight > 0.0) || !(d.floor > 0.0 && d.floor < 0.5) {
            return bad("size dynamics out of range");
        }
        let p = &self.params_prior;
        for (name, r, lo, hi) in [("lambda", p.lambda, 0.0, 1.0), ("a1", p.a1, 0.0, f64::INFINITY), ("gamma", p.gamma, 0.0, 1.0)] {
            if r.lo > r.hi || r.lo < lo || r.hi > hi {
                return Err(Error::InvalidConfig(format!("{name} prior range invalid")));
            }
        }
        if p.lambda.lo <= 0.0 || p.lambda.hi >= 1.0 {
            return bad("lambda prior must lie inside (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryTruth {
    pub country_id: String,
    pub n_groups: usize,
    pub params: ModelParams,
    pub gamma_star: f64,
    pub delta_star: Option<f64>,
}

/// Hidden ground truth, one entry per panel row in row order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthTruth {
    pub config: SynthConfig,
    pub countries: Vec<CountryTruth>,
    /// Net sharing advantage per row (model mode).
    pub h_values: Vec<f64>,
    /// Idiosyncratic error per row (quadratic mode).
    pub errors: Vec<f64>,
    pub country_period_effects: BTreeMap<String, f64>,
    pub group_effects: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPanel {
    pub panel: Panel,
    pub truth: SynthTruth,
}

impl SynthPanel {
    pub fn write_truth_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.truth)?;
        Ok(())
    }
}

fn sub_seed(seed: u64, country: usize) -> u64 {
    // splitmix64 of (seed, country)
    let mut z = seed ^ (country as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn reflect(mut x: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..64 {
        if x < lo {
            x = 2.0 * lo - x;
        } else if x > hi {
            x = 2.0 * hi - x;
        } else {
            return x;
        }
    }
    x.clamp(lo, hi)
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn country_id(c: usize) -> String {
    format!("C{:04}", c + 1)
}

fn group_id(c: usize, g: usize) -> String {
    format!("C{:04}-G{:02}", c + 1, g + 1)
}

struct CountryDraw {
    truth: CountryTruth,
    rows: Vec<PanelObservation>,
    h_values: Vec<f64>,
    errors: Vec<f64>,
    country_period_effects: Vec<(String, f64)>,
    group_effects: Vec<(String, f64)>,
}

fn generate_country(cfg: &SynthConfig, c: usize) -> Result<CountryDraw> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, c));
    let (gmin, gmax) = cfg.groups_per_country;
    let k = rng.random_range(gmin..=gmax);
    let prior = &cfg.params_prior;
    let params = ModelParams::new(prior.lambda.draw(&mut rng), prior.a1.draw(&mut rng), prior.gamma.draw(&mut rng))?;
    let dyn_ = &cfg.size_dynamics;

    // Initial shares: first k components of Dirichlet(1, ..., 1, dominant_weight).
    let unit = Gamma::new(1.0, 1.0).expect("valid gamma");
    let dominant = Gamma::new(dyn_.dominant_weight, 1.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let draws: Vec<f64> = (0..k).map(|_| unit.sample(&mut rng)).collect();
    let rest: f64 = dominant.sample(&mut rng);
    let total: f64 = draws.iter().sum::<f64>() + rest;
    let (lo, hi) = (logit(dyn_.floor), logit(1.0 - dyn_.floor));
    let centers: Vec<f64> = draws.iter().map(|d| reflect(logit((d / total).clamp(dyn_.floor, 1.0 - dyn_.floor)), lo, hi)).collect();

    let cid = country_id(c);
    let gstar = gamma_star(&params);
    let regime_open = params.gamma() >= gstar;
    let presence_level: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..0.3)).collect();

    let (group_fe, quad) = match cfg.mode {
        DgpMode::Quadratic(q) => ((0..k).map(|_| q.group_fe_sd * normal(&mut rng)).collect::<Vec<_>>(), Some(q)),
        DgpMode::Model => (vec![0.0; k], None),
    };

    let mut state = centers.clone();
    let mut rows = Vec::with_capacity(k * cfg.n_periods);
    let mut h_values = Vec::new();
    let mut errors = Vec::new();
    let mut cp_effects = Vec::new();
    let mut prev_sizes: Option<Vec<f64>> = None;
    for t in 0..cfg.n_periods {
        let mut attempt = 0;
        let (next, sizes) = loop {
            let next: Vec<f64> = state
                .iter()
                .zip(&centers)
                .map(|(&x, &m)| reflect(m + dyn_.rho * (x - m) + dyn_.drift + dyn_.volatility * normal(&mut rng), lo, hi))
                .collect();
            let sizes: Vec<f64> = next.iter().map(|&x| logistic(x)).collect();
            if sizes.iter().sum::<f64>() <= 1.0 {
                break (next, sizes);
            }
            attempt += 1;
            if attempt >= MAX_SHARE_RETRIES {
                return Err(Error::ShareOverflow { country: c, period: t + 1, retries: attempt });
            }
        };
        state = next;
        let period = t as i64 + 1;
        let cp_fe = match quad {
            Some(q) => {
                let v = q.country_period_fe_sd * normal(&mut rng);
                cp_effects.push((format!("{cid}:{period}"), v));
                v
            }
            None => 0.0,
        };
        for (g, &size) in sizes.iter().enumerate() {
            let access = match quad {
                Some(q) => {
                    let e = cfg.noise_sigma * normal(&mut rng);
                    errors.push(e);
                    q.alpha + q.beta1 * size + q.beta2 * size * size + cp_fe + group_fe[g] + e
                }
                None => {
                    let h = h_value(size, &params)?;
                    h_values.push(h);
                    let latent = Normal::standard().cdf(h / cfg.noise_sigma + normal(&mut rng));
                    f64::from(u8::from(latent > 1.0 / 3.0) + u8::from(latent > 2.0 / 3.0))
                }
            };
            let mut obs = PanelObservation::new(group_id(c, g), cid.clone(), period, size, access);
            obs.presence_abroad = (presence_level[g] + 0.02 * normal(&mut rng)).max(0.0);
            if let Some(prev) = &prev_sizes {
                obs.lag_size = Some(prev[g]);
                obs.lag_size_sq = Some(prev[g] * prev[g]);
            }
            if quad.is_none() {
                obs.high_openness = Some(regime_open);
                obs.high_competitiveness = Some(regime_open);
            }
            rows.push(obs);
        }
        prev_sizes = Some(sizes);
    }

    let group_effects = match quad {
        Some(_) => (0..k).map(|g| (group_id(c, g), group_fe[g])).collect(),
        None => Vec::new(),
    };
    Ok(CountryDraw {
        truth: CountryTruth {
            country_id: cid,
            n_groups: k,
            params,
            gamma_star: gstar,
            delta_star: thresholds(&params).ok().map(|t| t.delta_star),
        },
        rows,
        h_values,
        errors,
        country_period_effects: cp_effects,
        group_effects,
    })
}

/// Draws a panel. Output is a pure function of the configuration.
pub fn generate(config: &SynthConfig) -> Result<SynthPanel> {
    config.validate()?;
    let mut truth = SynthTruth {
        config: config.clone(),
        countries: Vec::with_capacity(config.n_countries),
        h_values: Vec::new(),
        errors: Vec::new(),
        country_period_effects: BTreeMap::new(),
        group_effects: BTreeMap::new(),
    };
    let mut rows = Vec::new();
    for c in 0..config.n_countries {
        let draw = generate_country(config, c)?;
        truth.countries.push(draw.truth);
        rows.extend(draw.rows);
        truth.h_values.extend(draw.h_values);
        truth.errors.extend(draw.errors);
        truth.country_period_effects.extend(draw.country_period_effects);
        truth.group_effects.extend(draw.group_effects);
    }
    Ok(SynthPanel { panel: Panel::new(rows), truth })
}

/// Ground-truth summary for comparison against a fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthReport {
    pub mode: &'static str,
    pub n_rows: usize,
    pub n_countries: usize,
    pub n_groups: usize,
    pub n_periods: usize,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    /// `-beta1 / (2 beta2)` in quadratic mode; the common `delta_star` in
    /// model mode when every country shares the same parameters.
    pub true_peak: Option<f64>,
    pub delta_star: Option<f64>,
    pub gamma_star: Option<f64>,
    pub share_open_regime: f64,
}

pub fn truth_report(synth: &SynthPanel) -> Result<TruthReport> {
    if synth.panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let countries = &synth.truth.countries;
    let homogeneous = countries.windows(2).all(|w| w[0].params == w[1].params);
    let common = if homogeneous { countries.first() } else { None };
    let open = countries.iter().filter(|c| c.params.gamma() >= c.gamma_star).count();
    let (mode, beta1, beta2, true_peak) = match synth.truth.config.mode {
        DgpMode::Quadratic(q) => {
            let peak = (q.beta2 < 0.0).then(|| -q.beta1 / (2.0 * q.beta2));
            ("quadratic", Some(q.beta1), Some(q.beta2), peak)
        }
        DgpMode::Model => ("model", None, None, common.and_then(|c| c.delta_star)),
    };
    Ok(TruthReport {
        mode,
        n_rows: synth.panel.len(),
        n_countries: countries.len(),
        n_groups: synth.panel.groups().len(),
        n_periods: synth.panel.periods().len(),
        beta1,
        beta2,
        true_peak,
        delta_star: common.and_then(|c| c.delta_star),
        gamma_star: common.map(|c| c.gamma_star),
        share_open_regime: open as f64 / countries.len().max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: DgpMode) -> SynthConfig {
        SynthConfig { n_countries: 12, n_periods: 6, seed: 42, mode, ..SynthConfig::default() }
    }

    #[test]
    fn same_seed_same_panel() {
        let a = generate(&small(DgpMode::Model)).unwrap();
        let b = generate(&small(DgpMode::Model)).unwrap();
        assert_eq!(a, b);
        let mut bytes_a = Vec::new();
        let mut bytes_b = Vec::new();
        a.panel.write_csv(&mut bytes_a).unwrap();
        b.panel.write_csv(&mut bytes_b).unwrap();
        assert_eq!(bytes_a, bytes_b);
        let c = generate(&SynthConfig { seed: 43, ..small(DgpMode::Model) }).unwrap();
        assert_ne!(a.panel, c.panel);
    }

    #[test]
    fn sizes_valid_and_sum_at_most_one() {
        let cfg = SynthConfig { groups_per_country: (2, 6), ..small(DgpMode::Quadratic(QuadraticDgp::default())) };
        let s = generate(&cfg).unwrap();
        let mut sums: BTreeMap<(String, i64), f64> = BTreeMap::new();
        for r in &s.panel.rows {
            assert!(r.size > 0.0 && r.size < 1.0);
            *sums.entry((r.country_id.clone(), r.period)).or_default() += r.size;
        }
        assert!(sums.values().all(|&v| v <= 1.0));
        s.panel.validate().unwrap();
    }

    #[test]
    fn model_mode_outcome_is_ordinal() {
        let s = generate(&small(DgpMode::Model)).unwrap();
        assert!(s.panel.rows.iter().all(|r| [0.0, 1.0, 2.0].contains(&r.access)));
        assert_eq!(s.truth.h_values.len(), s.panel.len());
        assert!(s.truth.errors.is_empty());
    }

    #[test]
    fn lags_are_previous_sizes() {
        let s = generate(&small(DgpMode::Model)).unwrap();
        let mut p = s.panel.clone();
        p.construct_lags();
        assert_eq!(p, s.panel);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            SynthConfig { n_countries: 0, ..SynthConfig::default() },
            SynthConfig { groups_per_country: (3, 2), ..SynthConfig::default() },
            SynthConfig { noise_sigma: 0.0, ..SynthConfig::default() },
            SynthConfig { params_prior: ParamsPrior { gamma: Range::new(0.5, 1.2), ..ParamsPrior::default() }, ..SynthConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(generate(&cfg), Err(Error::InvalidConfig(_))), "{cfg:?}");
        }
    }

    #[test]
    fn share_overflow_after_retries() {
        // Eight groups with near-uniform sizes almost never fit under one.
        let cfg = SynthConfig {
            groups_per_country: (8, 8),
            size_dynamics: SizeDynamics { volatility: 20.0, ..SizeDynamics::default() },
            ..small(DgpMode::Model)
        };
        assert!(matches!(generate(&cfg), Err(Error::ShareOverflow { .. })));
    }

    #[test]
    fn truth_report_peaks() {
        let q = generate(&small(DgpMode::Quadratic(QuadraticDgp::default()))).unwrap();
        let rep = truth_report(&q).unwrap();
        assert_eq!(rep.true_peak, Some(0.5));
        let m = generate(&small(DgpMode::Model)).unwrap();
        let rep = truth_report(&m).unwrap();
        assert!((rep.true_peak.unwrap() - 0.6837722).abs() < 1e-7);
        let empty = SynthPanel { panel: Panel::default(), truth: m.truth.clone() };
        assert!(matches!(truth_report(&empty), Err(Error::EmptyPanel)));
    }

    #[test]
    fn counts_match_config() {
        let s = generate(&small(DgpMode::Model)).unwrap();
        let rep = truth_report(&s).unwrap();
        let expected_rows: usize = s.truth.countries.iter().map(|c| c.n_groups * 6).sum();
        assert_eq!(rep.n_rows, expected_rows);
        assert_eq!(rep.n_countries, 12);
        assert_eq!(rep.n_periods, 6);
    }
}
