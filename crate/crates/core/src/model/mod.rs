//! Two-period limit-or-share game between an incumbent group and an
//! excluded group.
//!
//! Population is normalized to one. Group 2 (the excluded group) has relative
//! size `delta`, the incumbent bloc has `1 - delta`. The incumbent compares the
//! per-capita payoff of sharing power in period 2 with the expected per-capita
//! payoff of keeping group 2 out and fighting the resulting contest.
//!
//! The net advantage of sharing is
//!
//! ```text
//! h(delta) = gamma + (1 - gamma) / (1 - delta)
//!            - (1 - delta + a1) / (1 + a1) * (1 - lambda * delta) / (1 - delta)
//! ```
//!
//! with `f(delta) = h(delta; gamma = 1)`. Access is granted iff `h > 0`.
//! Positive `f` is the sharing region: substituting the contest payoff shows
//! `f > 0` exactly when sharing pays more than limiting, which is the reading
//! under which access follows an inverted U in `delta`.

mod sweep;

pub use sweep::{
    interior_grid, phase_grid, sweep_delta, write_phase_csv, write_sweep_csv, PhaseCell, SweepRow, SWEEP_HEADER,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// Parameters of the contest game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    lambda: f64,
    a1: f64,
    a2: f64,
    gamma: f64,
}

impl ModelParams {
    /// Builds parameters with the normalization `a2 = 0`.
    pub fn new(lambda: f64, a1: f64, gamma: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must lie in (0, 1)")));
        }
        if !(a1 >= 0.0 && a1.is_finite()) {
            return Err(Error::InvalidParameter(format!("a1 = {a1} must be finite and non-negative")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("gamma = {gamma} must lie in [0, 1]")));
        }
        Ok(Self { lambda, a1, a2: 0.0, gamma })
    }

    /// Fully proportional period-2 institutions (`gamma = 1`).
    pub fn proportional(lambda: f64, a1: f64) -> Result<Self> {
        Self::new(lambda, a1, 1.0)
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.lambda, self.a1, gamma)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Limiting is not a dominant strategy: `lambda / (1 - lambda) > a1`.
    pub fn assumption_holds(&self) -> bool {
        self.lambda / (1.0 - self.lambda) > self.a1
    }

    fn require_assumption(&self) -> Result<()> {
        if self.assumption_holds() {
            Ok(())
        } else {
            Err(Error::AssumptionViolated { ratio: self.lambda / (1.0 - self.lambda), a1: self.a1 })
        }
    }
}

/// Relative size of the excluded group, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct GroupSplit {
    delta: f64,
}

impl GroupSplit {
    pub fn new(delta: f64) -> Result<Self> {
        if delta > 0.0 && delta < 1.0 {
            Ok(Self { delta })
        } else {
            Err(Error::Domain(delta))
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn incumbent_size(&self) -> f64 {
        1.0 - self.delta
    }
}

/// Period-2 control shares: proportional (`s`) and institution-adjusted (`q`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlShares {
    pub s1: f64,
    pub s2: f64,
    pub q1: f64,
    pub q2: f64,
}

pub fn control_shares(split: GroupSplit, params: &ModelParams) -> ControlShares {
    let s2 = split.delta;
    let q2 = params.gamma * s2;
    ControlShares { s1: 1.0 - s2, s2, q1: 1.0 - q2, q2 }
}

/// Contest win probabilities `(p1, p2)` with additive coordination advantages.
pub fn contest_probabilities(split: GroupSplit, params: &ModelParams) -> (f64, f64) {
    let total = 1.0 + params.a1 + params.a2;
    let p2 = (split.delta + params.a2) / total;
    (1.0 - p2, p2)
}

/// Group-1 per-capita payoffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Payoffs {
    pub share: f64,
    pub limit: f64,
}

pub fn payoffs(split: GroupSplit, params: &ModelParams) -> Result<Payoffs> {
    let n1 = split.incumbent_size();
    if n1 <= f64::EPSILON {
        return Err(Error::DegenerateSplit(split.delta));
    }
    let shares = control_shares(split, params);
    let (p1, _) = contest_probabilities(split, params);
    Ok(Payoffs {
        share: shares.q1 / n1,
        limit: p1 * (1.0 - params.lambda * split.delta) / n1,
    })
}

fn check_delta(delta: f64) -> Result<()> {
    if (0.0..1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::Domain(delta))
    }
}

fn limit_term(delta: f64, params: &ModelParams) -> f64 {
    (1.0 - delta + params.a1) / (1.0 + params.a1) * (1.0 - params.lambda * delta) / (1.0 - delta)
}

/// Net sharing advantage under proportional institutions. `f(0) = 0` exactly.
pub fn f_value(delta: f64, params: &ModelParams) -> Result<f64> {
    check_delta(delta)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - limit_term(delta, params))
}

/// Net sharing advantage with institutional openness `gamma`. `h(0) = 0` exactly.
pub fn h_value(delta: f64, params: &ModelParams) -> Result<f64> {
    check_delta(delta)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let g = params.gamma;
    Ok(g + (1.0 - g) / (1.0 - delta) - limit_term(delta, params))
}

/// Closed-form `(f', f'')`.
pub fn f_derivatives(delta: f64, params: &ModelParams) -> Result<(f64, f64)> {
    h_derivatives(delta, &params.with_gamma(1.0)?)
}

/// Closed-form `(h', h'')`. Defined on `[0, 1)`.
pub fn h_derivatives(delta: f64, params: &ModelParams) -> Result<(f64, f64)> {
    check_delta(delta)?;
    let (lambda, a1, g) = (params.lambda, params.a1, params.gamma);
    let om = 1.0 - delta;
    let bracket = a1 - lambda * (1.0 + a1) + 2.0 * lambda * delta - lambda * delta * delta;
    let d1 = ((1.0 - g) - bracket / (1.0 + a1)) / (om * om);
    let d2 = 2.0 / (om * om * om) * ((1.0 - g) - a1 * (1.0 - lambda) / (1.0 + a1));
    Ok((d1, d2))
}

/// Everything the incumbent evaluates at one split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecisionOutcome {
    pub delta: f64,
    pub s1: f64,
    pub s2: f64,
    pub q1: f64,
    pub q2: f64,
    pub p1: f64,
    pub p2: f64,
    pub payoff_share: f64,
    pub payoff_limit: f64,
    pub f_value: f64,
    pub h_value: f64,
    /// `h > 0`; indifference keeps the status quo.
    pub grants_access: bool,
}

pub fn decide(delta: f64, params: &ModelParams) -> Result<DecisionOutcome> {
    let split = GroupSplit::new(delta)?;
    let shares = control_shares(split, params);
    let (p1, p2) = contest_probabilities(split, params);
    let pay = payoffs(split, params)?;
    let f = f_value(delta, params)?;
    let h = h_value(delta, params)?;
    Ok(DecisionOutcome {
        delta,
        s1: shares.s1,
        s2: shares.s2,
        q1: shares.q1,
        q2: shares.q2,
        p1,
        p2,
        payoff_share: pay.share,
        payoff_limit: pay.limit,
        f_value: f,
        h_value: h,
        grants_access: h > 0.0,
    })
}

/// Analytic thresholds of the sharing region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Maximizer of `f` on (0, 1).
    pub delta_star: f64,
    /// Upper root of `f`; `f > 0` on `(0, delta_bar)`.
    pub delta_bar: f64,
    /// Curvature switch of `h` in `gamma`.
    pub gamma_star: f64,
}

/// `(1 + lambda a1) / (1 + a1)`: `h` is convex below, concave above.
pub fn gamma_star(params: &ModelParams) -> f64 {
    (1.0 + params.lambda * params.a1) / (1.0 + params.a1)
}

pub fn thresholds(params: &ModelParams) -> Result<Thresholds> {
    params.require_assumption()?;
    if params.a1 <= 0.0 {
        return Err(Error::InvalidParameter(
            "a1 must be positive for an interior maximizer and root".into(),
        ));
    }
    let (lambda, a1) = (params.lambda, params.a1);
    Ok(Thresholds {
        delta_star: 1.0 - (a1 * lambda * (1.0 - lambda)).sqrt() / lambda,
        delta_bar: 1.0 - a1 * (1.0 - lambda) / lambda,
        gamma_star: gamma_star(params),
    })
}
