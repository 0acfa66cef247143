use nalgebra::{DMatrix, DVector};

use super::absorb::{encode, non_singletons, Absorber};
use super::spec::{ClusterBy, LagMode, Outcome, RegressionSpec, Subsample};
use crate::error::{Error, Result};
use crate::panel::{Panel, PanelObservation};

/// A column whose demeaned norm falls below this fraction of its centered
/// raw norm is reported as absorbed by the fixed effects and set to zero.
pub const ABSORBED_TOL: f64 = 1e-8;

/// Regressor names and columns, instrument names and columns, focal sizes.
type Columns<'a> = (Vec<&'a str>, Vec<Vec<f64>>, Vec<&'a str>, Vec<Vec<f64>>, Vec<f64>);

/// Transformed estimation inputs.
#[derive(Debug, Clone)]
pub struct Design {
    pub y: DVector<f64>,
    /// Regressors; the first `n_endogenous` are endogenous under IV.
    pub x: DMatrix<f64>,
    pub names: Vec<String>,
    pub n_endogenous: usize,
    /// Excluded instruments (IV only).
    pub instruments: Option<DMatrix<f64>>,
    pub instrument_names: Vec<String>,
    pub clusters: Vec<usize>,
    pub n_clusters: usize,
    /// Positions of the linear and squared size terms in `x`.
    pub focal: [usize; 2],
    /// Size values of the estimation sample, for locating the peak.
    pub focal_sizes: Vec<f64>,
    pub has_intercept: bool,
    pub n_absorbed: usize,
    pub dropped_singletons: usize,
    /// Regressors reduced to ~0 by the within transformation.
    pub absorbed_columns: Vec<String>,
    /// Absolute error bound of the transformed columns; residual column
    /// norms at or below it are treated as zero.
    pub noise_floor: f64,
    pub sweeps: usize,
    /// Indices of the panel rows used.
    pub rows: Vec<usize>,
}

impl Design {
    /// Untransformed design from explicit matrices (no absorbed effects).
    pub fn from_matrices(y: DVector<f64>, x: DMatrix<f64>, names: Vec<String>, clusters: Vec<usize>) -> Self {
        let (clusters, n_clusters) = encode(&clusters);
        let n = y.len();
        let focal_sizes = if x.ncols() > 0 { x.column(0).iter().copied().collect() } else { Vec::new() };
        Self {
            y,
            x,
            names,
            n_endogenous: 0,
            instruments: None,
            instrument_names: Vec::new(),
            clusters,
            n_clusters,
            focal: [0, 1],
            focal_sizes,
            has_intercept: false,
            n_absorbed: 0,
            dropped_singletons: 0,
            absorbed_columns: Vec::new(),
            noise_floor: 0.0,
            sweeps: 0,
            rows: (0..n).collect(),
        }
    }

    pub fn with_focal(mut self, focal: [usize; 2]) -> Self {
        self.focal = focal;
        self.focal_sizes = self.x.column(focal[0]).iter().copied().collect();
        self
    }

    /// Marks the first `n_endogenous` regressors as endogenous with the given
    /// excluded instruments.
    pub fn with_instruments(mut self, n_endogenous: usize, z: DMatrix<f64>, names: Vec<String>) -> Self {
        self.n_endogenous = n_endogenous;
        self.instruments = Some(z);
        self.instrument_names = names;
        self
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }
}

fn in_subsample(r: &PanelObservation, s: Option<Subsample>) -> bool {
    match s {
        None => true,
        Some(Subsample::Openness { high }) => r.high_openness == Some(high),
        Some(Subsample::Competitiveness { high }) => r.high_competitiveness == Some(high),
    }
}

fn outcome(r: &PanelObservation, o: Outcome) -> f64 {
    match o {
        Outcome::Ordinal => r.access,
        Outcome::Binary => r.access_binary,
    }
}

/// Selects the estimation sample, absorbs fixed effects and group trends, and
/// returns the transformed outcome, regressors and instruments.
pub fn build_design(panel: &Panel, spec: &RegressionSpec) -> Result<Design> {
    let needs_lag = spec.lag_mode != LagMode::Contemporaneous;
    let mut rows: Vec<usize> = panel
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| spec.max_access.is_none_or(|m| r.access <= m))
        .filter(|(_, r)| in_subsample(r, spec.subsample))
        .map(|(i, _)| i)
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyPanel);
    }
    if needs_lag {
        rows.retain(|&i| panel.rows[i].lag_size.is_some());
        if rows.is_empty() {
            return Err(Error::InsufficientOverlap("no rows have a lagged size".into()));
        }
    }

    let fe = spec.fe;
    let use_cp = fe.country_period;
    let use_country = fe.country && !use_cp;
    let use_period = fe.period && !use_cp;
    let use_trends = spec.group_trends;
    let use_group = fe.group && !use_trends;

    // Drop singleton levels, then rebuild codes on the surviving rows.
    let mut dropped_singletons = 0;
    if use_cp || use_country || use_period || use_group || use_trends {
        loop {
            let sets = factor_codes(panel, &rows, use_cp, use_country, use_period, use_group || use_trends);
            let refs: Vec<&[usize]> = sets.iter().map(|v| v.as_slice()).collect();
            let keep = non_singletons(&refs, rows.len());
            let before = rows.len();
            rows = rows.into_iter().zip(keep).filter(|(_, k)| *k).map(|(i, _)| i).collect();
            dropped_singletons += before - rows.len();
            if rows.len() == before {
                break;
            }
        }
        if rows.is_empty() {
            return Err(Error::EmptyPanel);
        }
    }
    let n = rows.len();
    let obs: Vec<&PanelObservation> = rows.iter().map(|&i| &panel.rows[i]).collect();

    let factors = factor_codes(panel, &rows, use_cp, use_country, use_period, use_group);
    let trends = use_trends.then(|| {
        let (codes, _) = encode(&obs.iter().map(|r| r.group_id.as_str()).collect::<Vec<_>>());
        (codes, obs.iter().map(|r| r.period as f64).collect::<Vec<_>>())
    });
    let absorber = Absorber::new(n, factors, trends, spec.absorb);
    // A single projection is exact; alternating ones stop within `tolerance`
    // per cell, with a margin for the tail estimate.
    let noise_floor = if absorber.n_sets() > 1 { 100.0 * spec.absorb.tolerance * (n as f64).sqrt() } else { 0.0 };

    let lag = |r: &PanelObservation| r.lag_size.expect("lag filtered");
    let (names, raw_cols, z_names, z_cols, focal_sizes): Columns =
        match spec.lag_mode {
            LagMode::Contemporaneous => (
                vec!["size", "size_sq"],
                vec![obs.iter().map(|r| r.size).collect(), obs.iter().map(|r| r.size_sq).collect()],
                vec![],
                vec![],
                obs.iter().map(|r| r.size).collect(),
            ),
            LagMode::Lagged => (
                vec!["lag_size", "lag_size_sq"],
                vec![obs.iter().map(|r| lag(r)).collect(), obs.iter().map(|r| lag(r).powi(2)).collect()],
                vec![],
                vec![],
                obs.iter().map(|r| lag(r)).collect(),
            ),
            LagMode::IvLagged => (
                vec!["size", "size_sq"],
                vec![obs.iter().map(|r| r.size).collect(), obs.iter().map(|r| r.size_sq).collect()],
                vec!["lag_size", "lag_size_sq"],
                vec![obs.iter().map(|r| lag(r)).collect(), obs.iter().map(|r| lag(r).powi(2)).collect()],
                obs.iter().map(|r| r.size).collect(),
            ),
        };
    let mut names: Vec<String> = names.into_iter().map(String::from).collect();
    let mut raw_cols = raw_cols;
    if spec.include_presence_abroad {
        names.push("presence_abroad".into());
        raw_cols.push(obs.iter().map(|r| r.presence_abroad).collect());
    }

    let mut sweeps = 0;
    let mut absorbed_columns = Vec::new();
    let mut demean = |col: &mut Vec<f64>, name: &str, report: bool| -> Result<()> {
        let raw_norm = centered_norm(col);
        sweeps = sweeps.max(absorber.demean(col)?);
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if report && !absorber.is_empty() && (norm <= ABSORBED_TOL * raw_norm.max(f64::MIN_POSITIVE) || norm <= noise_floor) {
            absorbed_columns.push(name.to_string());
            // What is left is rounding; zero it so no later step estimates it.
            col.fill(0.0);
        }
        Ok(())
    };

    let mut y: Vec<f64> = obs.iter().map(|r| outcome(r, spec.outcome)).collect();
    demean(&mut y, "outcome", false)?;
    for (col, name) in raw_cols.iter_mut().zip(&names) {
        demean(col, name, true)?;
    }
    let mut z_cols = z_cols;
    for (col, name) in z_cols.iter_mut().zip(&z_names) {
        demean(col, name, true)?;
    }

    let has_intercept = absorber.is_empty();
    let mut focal = [0, 1];
    if has_intercept {
        names.insert(0, "const".into());
        raw_cols.insert(0, vec![1.0; n]);
        focal = [1, 2];
    }
    let x = DMatrix::from_fn(n, raw_cols.len(), |i, j| raw_cols[j][i]);

    let cluster_keys: Vec<String> = match spec.cluster_by {
        ClusterBy::Country => obs.iter().map(|r| r.country_id.clone()).collect(),
        ClusterBy::Observation => (0..n).map(|i| i.to_string()).collect(),
    };
    let (clusters, n_clusters) = encode(&cluster_keys);

    let (n_endogenous, instruments) = if spec.lag_mode == LagMode::IvLagged {
        (2, Some(DMatrix::from_fn(n, z_cols.len(), |i, j| z_cols[j][i])))
    } else {
        (0, None)
    };
    // Under IV the endogenous block must come first; the intercept goes after.
    let (x, names, focal) = if n_endogenous > 0 && has_intercept {
        let order: Vec<usize> = (1..x.ncols()).chain(std::iter::once(0)).collect();
        let x = DMatrix::from_fn(n, order.len(), |i, j| x[(i, order[j])]);
        let names = order.iter().map(|&j| names[j].clone()).collect();
        (x, names, [0, 1])
    } else {
        (x, names, focal)
    };

    Ok(Design {
        y: DVector::from_vec(y),
        x,
        names,
        n_endogenous,
        instruments,
        instrument_names: z_names.into_iter().map(String::from).collect(),
        clusters,
        n_clusters,
        focal,
        focal_sizes,
        has_intercept,
        n_absorbed: absorber.n_absorbed(),
        dropped_singletons,
        absorbed_columns,
        noise_floor,
        sweeps,
        rows,
    })
}

fn centered_norm(col: &[f64]) -> f64 {
    let mean = col.iter().sum::<f64>() / col.len().max(1) as f64;
    col.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt()
}

fn factor_codes(panel: &Panel, rows: &[usize], cp: bool, country: bool, period: bool, group: bool) -> Vec<Vec<usize>> {
    let obs = || rows.iter().map(|&i| &panel.rows[i]);
    let mut sets = Vec::new();
    if cp {
        sets.push(encode(&obs().map(|r| (r.country_id.as_str(), r.period)).collect::<Vec<_>>()).0);
    }
    if country {
        sets.push(encode(&obs().map(|r| r.country_id.as_str()).collect::<Vec<_>>()).0);
    }
    if period {
        sets.push(encode(&obs().map(|r| r.period).collect::<Vec<_>>()).0);
    }
    if group {
        sets.push(encode(&obs().map(|r| r.group_id.as_str()).collect::<Vec<_>>()).0);
    }
    sets
}
