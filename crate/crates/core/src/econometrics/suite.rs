//! The specification ladder and its robustness variants, run as a grid of
//! cells. A failing cell is recorded and the grid keeps going.

use std::io::Write;

use serde::Serialize;

use super::fit::{fit, FitResult};
use super::spec::{LagMode, Outcome, Reference, RegressionSpec, Subsample};
use crate::fmt::{opt, sig};
use crate::panel::Panel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Contemporaneous,
    Lagged,
    Iv,
    Dichotomous,
    FiveYear,
    FirstObservation,
    Covariate,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Contemporaneous,
        Variant::Lagged,
        Variant::Iv,
        Variant::Dichotomous,
        Variant::FiveYear,
        Variant::FirstObservation,
        Variant::Covariate,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Variant::Contemporaneous => "contemporaneous",
            Variant::Lagged => "lagged",
            Variant::Iv => "iv",
            Variant::Dichotomous => "dichotomous",
            Variant::FiveYear => "five_year",
            Variant::FirstObservation => "first_observation",
            Variant::Covariate => "covariate",
        }
    }

    fn apply(&self, spec: RegressionSpec) -> RegressionSpec {
        match self {
            Variant::Lagged => spec.with_lag_mode(LagMode::Lagged),
            Variant::Iv => spec.with_lag_mode(LagMode::IvLagged),
            Variant::Dichotomous => RegressionSpec { outcome: Outcome::Binary, ..spec },
            Variant::Covariate => RegressionSpec { include_presence_abroad: true, ..spec },
            _ => spec,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Openness,
    Competitiveness,
}

impl SplitKind {
    fn subsample(&self, high: bool) -> Subsample {
        match self {
            SplitKind::Openness => Subsample::Openness { high },
            SplitKind::Competitiveness => Subsample::Competitiveness { high },
        }
    }

    pub fn label(&self, high: bool) -> String {
        let side = if high { "high" } else { "low" };
        match self {
            SplitKind::Openness => format!("{side}_openness"),
            SplitKind::Competitiveness => format!("{side}_competitiveness"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteMenu {
    pub variants: Vec<Variant>,
    /// Ladder columns (1-5) run for every variant.
    pub columns: Vec<usize>,
    /// Ladder columns run for the IV variant; the FE rows of the IV columns
    /// are not pinned down, so they are configurable.
    pub iv_columns: Vec<usize>,
    pub splits: Vec<SplitKind>,
    /// Ladder columns run within each split subsample.
    pub split_columns: Vec<usize>,
    pub max_access: Option<f64>,
    pub small_sample_correction: bool,
    pub reference: Reference,
}

impl SuiteMenu {
    /// Columns (1)-(5), contemporaneous regressors only.
    pub fn baseline_ladder() -> Self {
        Self {
            variants: vec![Variant::Contemporaneous],
            columns: vec![1, 2, 3, 4, 5],
            iv_columns: vec![1, 2, 3, 4, 5],
            splits: Vec::new(),
            split_columns: vec![4, 5],
            max_access: None,
            small_sample_correction: false,
            reference: Reference::Asymptotic,
        }
    }

    /// Every variant and both institutional splits.
    pub fn full() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            splits: vec![SplitKind::Openness, SplitKind::Competitiveness],
            ..Self::baseline_ladder()
        }
    }

    pub fn restricted(mut self, max_access: f64) -> Self {
        self.max_access = Some(max_access);
        self
    }
}

/// Panels used by the suite; frequency and sampling variants need their own.
#[derive(Debug, Clone, Copy)]
pub struct SuiteData<'a> {
    pub baseline: &'a Panel,
    pub five_year: Option<&'a Panel>,
    pub first_obs: Option<&'a Panel>,
}

impl<'a> SuiteData<'a> {
    pub fn new(baseline: &'a Panel) -> Self {
        Self { baseline, five_year: None, first_obs: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteCell {
    pub variant: Variant,
    pub column: usize,
    pub split: Option<String>,
    pub spec: RegressionSpec,
    #[serde(serialize_with = "ser_outcome")]
    pub outcome: std::result::Result<FitResult, String>,
}

fn ser_outcome<S: serde::Serializer>(o: &std::result::Result<FitResult, String>, s: S) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    #[serde(tag = "status", rename_all = "snake_case")]
    enum View<'a> {
        Ok { fit: &'a FitResult },
        Failed { error: &'a str },
    }
    match o {
        Ok(fit) => View::Ok { fit }.serialize(s),
        Err(e) => View::Failed { error: e }.serialize(s),
    }
}

impl SuiteCell {
    pub fn fit(&self) -> Option<&FitResult> {
        self.outcome.as_ref().ok()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResults {
    pub cells: Vec<SuiteCell>,
}

#[derive(Serialize)]
struct FooterRow {
    column: usize,
    country_fe: bool,
    period_fe: bool,
    country_period_fe: bool,
    group_fe: bool,
    group_trends: bool,
}

pub const RESULTS_HEADER: &str = "variant,column,split,estimator,coefficient,estimate,std_error,t_stat,p_value,n_obs,n_clusters,n_absorbed,wald_stat,wald_p,peak,peak_se,peak_percentile,small_sample_correction,status";

impl SuiteResults {
    pub fn find(&self, variant: Variant, column: usize, split: Option<&str>) -> Option<&SuiteCell> {
        self.cells.iter().find(|c| c.variant == variant && c.column == column && c.split.as_deref() == split)
    }

    /// One row per (cell, coefficient); failed cells get a single row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> crate::Result<()> {
        writeln!(w, "{RESULTS_HEADER}")?;
        for c in &self.cells {
            let split = c.split.clone().unwrap_or_default();
            match &c.outcome {
                Ok(f) => {
                    for (i, name) in f.names.iter().enumerate() {
                        writeln!(
                            w,
                            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},ok",
                            c.variant.label(),
                            c.column,
                            split,
                            f.estimator,
                            name,
                            sig(f.beta[i], 9),
                            sig(f.std_errors[i], 9),
                            sig(f.t_stats[i], 9),
                            sig(f.p_values[i], 9),
                            f.n_obs,
                            f.n_clusters,
                            f.n_absorbed,
                            opt(f.wald_joint.map(|t| t.statistic), 9),
                            opt(f.wald_joint.map(|t| t.p_value), 9),
                            opt(f.peak.map(|p| p.peak), 9),
                            opt(f.peak.map(|p| p.std_error), 9),
                            opt(f.peak.map(|p| p.percentile), 9),
                            f.small_sample_correction,
                        )?;
                    }
                }
                Err(e) => {
                    let status = format!("\"failed: {}\"", e.replace('"', "'"));
                    writeln!(w, "{},{},{},,,,,,,,,,,,,,,,{}", c.variant.label(), c.column, split, status)?;
                }
            }
        }
        Ok(())
    }

    /// Full report with covariance blocks, tests, peaks and the FE footer.
    pub fn write_json<W: Write>(&self, w: W) -> crate::Result<()> {
        let mut cols: Vec<usize> = self.cells.iter().map(|c| c.column).collect();
        cols.sort_unstable();
        cols.dedup();
        let footer: Vec<FooterRow> = cols
            .into_iter()
            .filter_map(|k| RegressionSpec::ladder(k).map(|s| (k, s)))
            .map(|(column, s)| FooterRow {
                column,
                country_fe: s.fe.country,
                period_fe: s.fe.period,
                country_period_fe: s.fe.country_period,
                group_fe: s.fe.group,
                group_trends: s.group_trends,
            })
            .collect();
        let report = serde_json::json!({
            "covariance": "cluster-robust by country; CR0 unless small_sample_correction is set",
            "joint_test": "beta1 = beta2 = 0",
            "cells": &self.cells,
            "footer": footer,
        });
        serde_json::to_writer_pretty(w, &report)?;
        Ok(())
    }
}

fn run_cell(panel: Option<&Panel>, variant: Variant, column: usize, split: Option<(SplitKind, bool)>, menu: &SuiteMenu) -> SuiteCell {
    let base = RegressionSpec::ladder(column).unwrap_or_default();
    let mut spec = variant.apply(RegressionSpec {
        max_access: menu.max_access,
        small_sample_correction: menu.small_sample_correction,
        reference: menu.reference,
        ..base
    });
    spec.subsample = split.map(|(k, high)| k.subsample(high));
    let outcome = match (RegressionSpec::ladder(column), panel) {
        (None, _) => Err(format!("no ladder column {column}")),
        (_, None) => Err(format!("no panel supplied for the {} variant", variant.label())),
        (_, Some(p)) => fit(p, &spec).map_err(|e| e.to_string()),
    };
    SuiteCell { variant, column, split: split.map(|(k, h)| k.label(h)), spec, outcome }
}

/// Runs every (variant, column) cell of the menu, then the split subsamples.
pub fn replicate_suite(data: SuiteData<'_>, menu: &SuiteMenu) -> SuiteResults {
    let mut cells = Vec::new();
    for &variant in &menu.variants {
        let panel = match variant {
            Variant::FiveYear => data.five_year,
            Variant::FirstObservation => data.first_obs,
            _ => Some(data.baseline),
        };
        let columns = if variant == Variant::Iv { &menu.iv_columns } else { &menu.columns };
        for &column in columns {
            cells.push(run_cell(panel, variant, column, None, menu));
        }
    }
    for &kind in &menu.splits {
        for &variant in menu.variants.iter().filter(|v| matches!(v, Variant::Contemporaneous | Variant::Lagged | Variant::Iv)) {
            for high in [true, false] {
                for &column in &menu.split_columns {
                    cells.push(run_cell(Some(data.baseline), variant, column, Some((kind, high)), menu));
                }
            }
        }
    }
    SuiteResults { cells }
}
