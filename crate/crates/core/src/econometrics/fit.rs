use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::design::{build_design, Design};
use super::inference::{peak_inference, wald, wald_joint, PeakEstimate, WaldTest};
use super::linalg::{cluster_meat, independent_columns_above, least_squares, least_squares_above, sandwich, select_columns};
use super::spec::{LagMode, Reference, RegressionSpec};
use crate::error::{Error, Result};
use crate::panel::Panel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InferenceOptions {
    pub small_sample_correction: bool,
    pub reference: Reference,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        Self { small_sample_correction: false, reference: Reference::Asymptotic }
    }
}

impl From<&RegressionSpec> for InferenceOptions {
    fn from(spec: &RegressionSpec) -> Self {
        Self { small_sample_correction: spec.small_sample_correction, reference: spec.reference }
    }
}

/// First-stage strength for one endogenous regressor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstStage {
    pub endogenous: String,
    /// Cluster-robust Wald statistic on the excluded instruments divided by
    /// their number.
    pub f_statistic: f64,
    pub partial_r2: f64,
}

fn ser_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    rows.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub estimator: &'static str,
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    /// Cluster-robust covariance (CR0 unless the correction is enabled).
    #[serde(serialize_with = "ser_matrix")]
    pub vcov: DMatrix<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Positions of the linear and squared size terms.
    pub focal: [usize; 2],
    pub n_obs: usize,
    pub n_clusters: usize,
    pub n_absorbed: usize,
    pub dropped_singletons: usize,
    pub dropped_collinear: Vec<String>,
    pub small_sample_correction: bool,
    pub correction_factor: f64,
    pub reference: Reference,
    pub wald_joint: Option<WaldTest>,
    pub peak: Option<PeakEstimate>,
    pub first_stage: Vec<FirstStage>,
    pub sweeps: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn beta1(&self) -> f64 {
        self.beta[self.focal[0]]
    }

    pub fn beta2(&self) -> f64 {
        self.beta[self.focal[1]]
    }

    pub fn se1(&self) -> f64 {
        self.std_errors[self.focal[0]]
    }

    pub fn se2(&self) -> f64 {
        self.std_errors[self.focal[1]]
    }

    pub fn t1(&self) -> f64 {
        self.t_stats[self.focal[0]]
    }

    pub fn t2(&self) -> f64 {
        self.t_stats[self.focal[1]]
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.beta[i])
    }
}

fn remap_focal(design: &Design, kept: &[usize]) -> Result<[usize; 2]> {
    let find = |j: usize| kept.iter().position(|&k| k == j).ok_or_else(|| Error::RankDeficient(design.names[j].clone()));
    Ok([find(design.focal[0])?, find(design.focal[1])?])
}

struct Pieces {
    estimator: &'static str,
    kept: Vec<usize>,
    beta: DVector<f64>,
    vcov_cr0: DMatrix<f64>,
    residuals: DVector<f64>,
    first_stage: Vec<FirstStage>,
}

fn finish(design: &Design, inf: InferenceOptions, p: Pieces) -> Result<FitResult> {
    let focal = remap_focal(design, &p.kept)?;
    let names: Vec<String> = p.kept.iter().map(|&j| design.names[j].clone()).collect();
    let dropped_collinear: Vec<String> =
        (0..design.names.len()).filter(|j| !p.kept.contains(j)).map(|j| design.names[j].clone()).collect();
    let n = design.n_obs();
    let g = design.n_clusters;
    let k = p.kept.len() + design.n_absorbed;
    let correction_factor = if inf.small_sample_correction && g > 1 && n > k {
        (g as f64 / (g as f64 - 1.0)) * ((n as f64 - 1.0) / (n - k) as f64)
    } else {
        1.0
    };
    let vcov = p.vcov_cr0 * correction_factor;
    let std_errors: Vec<f64> = (0..vcov.nrows()).map(|i| vcov[(i, i)].max(0.0).sqrt()).collect();
    let t_stats: Vec<f64> = p.beta.iter().zip(&std_errors).map(|(b, s)| b / s).collect();
    let p_values: Vec<f64> = match inf.reference {
        Reference::Asymptotic => {
            let z = Normal::standard();
            t_stats.iter().map(|t| 2.0 * z.sf(t.abs())).collect()
        }
        Reference::SmallSample => {
            let dist = StudentsT::new(0.0, 1.0, (g.max(2) - 1) as f64).expect("positive df");
            t_stats.iter().map(|t| 2.0 * dist.sf(t.abs())).collect()
        }
    };
    let mut fit = FitResult {
        estimator: p.estimator,
        names,
        beta: p.beta.iter().copied().collect(),
        vcov,
        std_errors,
        t_stats,
        p_values,
        focal,
        n_obs: n,
        n_clusters: g,
        n_absorbed: design.n_absorbed,
        dropped_singletons: design.dropped_singletons,
        dropped_collinear,
        small_sample_correction: inf.small_sample_correction,
        correction_factor,
        reference: inf.reference,
        wald_joint: None,
        peak: None,
        first_stage: p.first_stage,
        sweeps: design.sweeps,
        residuals: p.residuals.iter().copied().collect(),
    };
    fit.wald_joint = wald_joint(&fit).ok();
    fit.peak = peak_inference(&fit, &design.focal_sizes).ok();
    Ok(fit)
}

fn check_clusters(design: &Design) -> Result<()> {
    if design.n_clusters < 2 {
        Err(Error::InsufficientClusters(design.n_clusters))
    } else {
        Ok(())
    }
}

/// The focal regressors must survive once every other column has been taken
/// first; otherwise the selection order alone decides what is estimated.
fn check_focal(design: &Design) -> Result<()> {
    let order: Vec<usize> = (0..design.x.ncols()).filter(|j| !design.focal.contains(j)).chain(design.focal).collect();
    let (kept, _) = independent_columns_above(&select_columns(&design.x, &order), design.noise_floor);
    for (pos, &j) in order.iter().enumerate().skip(order.len() - 2) {
        if !kept.contains(&pos) {
            return Err(Error::RankDeficient(design.names[j].clone()));
        }
    }
    Ok(())
}

/// Least squares with cluster-robust covariance on a prepared design.
pub fn ols_design(design: &Design, inf: InferenceOptions) -> Result<FitResult> {
    check_clusters(design)?;
    check_focal(design)?;
    let ls = least_squares_above(&design.x, &design.y, design.noise_floor);
    let xk = select_columns(&design.x, &ls.kept);
    let residuals = &design.y - &xk * &ls.beta;
    let meat = cluster_meat(&xk, &residuals, &design.clusters, design.n_clusters);
    let vcov_cr0 = sandwich(&ls.bread, &meat);
    finish(design, inf, Pieces { estimator: "ols", kept: ls.kept, beta: ls.beta, vcov_cr0, residuals, first_stage: Vec::new() })
}

/// Two-stage least squares: the first `n_endogenous` regressors are replaced
/// by their projections on the excluded instruments and every other
/// regressor. Clustered covariance uses the structural residuals.
pub fn tsls_design(design: &Design, inf: InferenceOptions) -> Result<FitResult> {
    check_clusters(design)?;
    let z = design
        .instruments
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("two-stage least squares needs instruments".into()))?;
    let ne = design.n_endogenous;
    if z.ncols() < ne {
        return Err(Error::WeakFirstStage(format!("{} instruments for {} endogenous regressors", z.ncols(), ne)));
    }
    check_focal(design)?;
    let (kept, _) = independent_columns_above(&design.x, design.noise_floor);
    for j in 0..ne {
        if !kept.contains(&j) {
            return Err(Error::RankDeficient(design.names[j].clone()));
        }
    }
    let x = select_columns(&design.x, &kept);
    let n = x.nrows();
    let exog_cols: Vec<usize> = (ne..x.ncols()).collect();

    // Instruments: excluded instruments first, then the exogenous regressors.
    let w = DMatrix::from_fn(n, z.ncols() + exog_cols.len(), |i, j| {
        if j < z.ncols() {
            z[(i, j)]
        } else {
            x[(i, exog_cols[j - z.ncols()])]
        }
    });
    let (w_kept, w_dropped) = independent_columns_above(&w, design.noise_floor);
    if let Some(&j) = w_dropped.iter().find(|&&j| j < z.ncols()) {
        let name = design.instrument_names.get(j).cloned().unwrap_or_else(|| format!("z{j}"));
        return Err(Error::WeakFirstStage(format!("instrument `{name}` is collinear with the other instruments")));
    }
    let wk = select_columns(&w, &w_kept);
    let n_excluded = z.ncols();

    let mut xhat = x.clone();
    let mut first_stage = Vec::with_capacity(ne);
    for (j, &col) in kept.iter().enumerate().take(ne) {
        let target = x.column(j).into_owned();
        let fs = least_squares(&wk, &target);
        let fitted = &wk * &fs.beta;
        let resid = &target - &fitted;
        xhat.set_column(j, &fitted);

        let meat = cluster_meat(&wk, &resid, &design.clusters, design.n_clusters);
        let v = sandwich(&fs.bread, &meat);
        let excl: Vec<usize> = (0..n_excluded).collect();
        let b: Vec<f64> = excl.iter().map(|&i| fs.beta[i]).collect();
        let vz = DMatrix::from_fn(n_excluded, n_excluded, |a, c| v[(a, c)]);
        let f_statistic = super::inference::wald_quadratic_form(&b, &vz, Reference::Asymptotic, 1)
            .map(|w| w.statistic / n_excluded as f64)
            .unwrap_or(f64::NAN);
        // Partial R^2 of the excluded instruments given the exogenous block.
        let exog_only: Vec<usize> = (n_excluded..wk.ncols()).collect();
        let restricted_rss = if exog_only.is_empty() {
            target.norm_squared()
        } else {
            let we = select_columns(&wk, &exog_only);
            let r = least_squares(&we, &target);
            (&target - &we * &r.beta).norm_squared()
        };
        let partial_r2 = if restricted_rss > 0.0 { 1.0 - resid.norm_squared() / restricted_rss } else { f64::NAN };
        first_stage.push(FirstStage { endogenous: design.names[col].clone(), f_statistic, partial_r2 });
    }

    let (xh_kept, xh_dropped) = independent_columns_above(&xhat, design.noise_floor);
    if !xh_dropped.is_empty() {
        return Err(Error::WeakFirstStage("projected regressors are singular".into()));
    }
    debug_assert_eq!(xh_kept.len(), xhat.ncols());
    let second = least_squares(&xhat, &design.y);
    let residuals = &design.y - &x * &second.beta;
    let meat = cluster_meat(&xhat, &residuals, &design.clusters, design.n_clusters);
    let vcov_cr0 = sandwich(&second.bread, &meat);
    finish(design, inf, Pieces { estimator: "2sls", kept, beta: second.beta, vcov_cr0, residuals, first_stage })
}

/// Fits the quadratic specification by least squares (contemporaneous or
/// lagged regressors).
pub fn fit_ols(panel: &Panel, spec: &RegressionSpec) -> Result<FitResult> {
    if spec.lag_mode == LagMode::IvLagged {
        return Err(Error::InvalidParameter("fit_ols does not take the iv-lagged mode; use fit_iv".into()));
    }
    let design = build_design(panel, spec)?;
    ols_design(&design, spec.into())
}

/// Fits the quadratic specification by 2SLS with lagged size terms as
/// instruments.
pub fn fit_iv(panel: &Panel, spec: &RegressionSpec) -> Result<FitResult> {
    if spec.lag_mode != LagMode::IvLagged {
        return Err(Error::InvalidParameter("fit_iv requires the iv-lagged mode".into()));
    }
    let design = build_design(panel, spec)?;
    tsls_design(&design, spec.into())
}

/// Dispatches on the lag mode.
pub fn fit(panel: &Panel, spec: &RegressionSpec) -> Result<FitResult> {
    match spec.lag_mode {
        LagMode::IvLagged => fit_iv(panel, spec),
        _ => fit_ols(panel, spec),
    }
}

/// Joint test on arbitrary coefficient names.
pub fn wald_by_name(fit: &FitResult, names: &[&str]) -> Result<WaldTest> {
    let pos: Vec<usize> = names
        .iter()
        .map(|n| fit.names.iter().position(|m| m == n).ok_or_else(|| Error::InvalidParameter(format!("no coefficient `{n}`"))))
        .collect::<Result<_>>()?;
    wald(fit, &pos)
}
