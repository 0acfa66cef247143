//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use powersharing::econometrics::{FeSets, RegressionSpec};
use powersharing::{Panel, PanelObservation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Grid argmax of `f` over `n` interior points of (0, 1).
pub fn grid_argmax(n: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let step = 1.0 / (n + 1) as f64;
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for i in 1..=n {
        let x = i as f64 * step;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    (best.0, step)
}

/// Bisection for a sign change of `f` on `[lo, hi]` to width `tol`.
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Key for sorting random panels.
fn key(r: &PanelObservation) -> (String, i64) {
    (r.group_id.clone(), r.period)
}

/// Random unbalanced panel with at most `max_rows` rows.
pub fn random_panel(seed: u64, max_rows: usize) -> Panel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let countries = rng.random_range(3..=8);
        let periods = rng.random_range(3..=8);
        let mut rows = Vec::new();
        for c in 0..countries {
            let groups = if c == 0 { 1 } else { rng.random_range(2..=4) };
            for g in 0..groups {
                let base: f64 = rng.random_range(0.02..0.6);
                for t in 1..=periods {
                    if rng.random_bool(0.1) {
                        continue;
                    }
                    let size = (base + rng.random_range(-0.05..0.05f64)).clamp(0.001, 0.999);
                    let access = 1.0 + 2.0 * size - 2.5 * size * size + 0.3 * rng.random_range(-1.0..1.0) + 0.05 * t as f64;
                    let mut o = PanelObservation::new(format!("c{c}g{g}"), format!("c{c}"), t, size, access);
                    o.presence_abroad = rng.random_range(0.0..0.2);
                    rows.push(o);
                }
            }
        }
        if rows.len() >= 20 && rows.len() <= max_rows {
            rows.sort_by_key(key);
            let mut p = Panel::new(rows);
            p.construct_lags();
            return p;
        }
    }
}

const PRIME: u128 = (1 << 61) - 1;

fn pow_mod(mut b: u128, mut e: u128) -> u128 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % PRIME;
        }
        b = b * b % PRIME;
        e >>= 1;
    }
    r
}

/// Indices of a maximal linearly independent subset of integer columns,
/// scanned in order, by exact elimination over GF(2^61 - 1).
pub fn independent_integer_columns(cols: &[Vec<i64>]) -> Vec<usize> {
    let to_mod = |v: i64| (v.rem_euclid(PRIME as i64)) as u128;
    let mut basis: Vec<(usize, Vec<u128>)> = Vec::new();
    let mut kept = Vec::new();
    for (j, col) in cols.iter().enumerate() {
        let mut v: Vec<u128> = col.iter().map(|&x| to_mod(x)).collect();
        for (pivot, b) in &basis {
            let f = v[*pivot];
            if f != 0 {
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi = (*vi + PRIME - f * bi % PRIME) % PRIME;
                }
            }
        }
        if let Some(pivot) = v.iter().position(|&x| x != 0) {
            let inv = pow_mod(v[pivot], PRIME - 2);
            for vi in &mut v {
                *vi = *vi * inv % PRIME;
            }
            basis.push((pivot, v));
            kept.push(j);
        }
    }
    kept
}

/// Explicit intercept, dummy and group-trend columns with redundant columns
/// removed exactly.
pub fn dummy_design(panel: &Panel, fe: FeSets, trends: bool) -> DMatrix<f64> {
    let rows = &panel.rows;
    let n = rows.len();
    let mut ints: Vec<Vec<i64>> = vec![vec![1; n]];
    let mut dummies = |key: &dyn Fn(&PanelObservation) -> String| {
        let levels: BTreeMap<String, ()> = rows.iter().map(|r| (key(r), ())).collect();
        for level in levels.keys() {
            ints.push(rows.iter().map(|r| i64::from(&key(r) == level)).collect());
        }
    };
    if fe.country {
        dummies(&|r| r.country_id.clone());
    }
    if fe.period {
        dummies(&|r| r.period.to_string());
    }
    if fe.country_period {
        dummies(&|r| format!("{}:{}", r.country_id, r.period));
    }
    if fe.group || trends {
        dummies(&|r| r.group_id.clone());
    }
    if trends {
        let groups: BTreeMap<String, ()> = rows.iter().map(|r| (r.group_id.clone(), ())).collect();
        for g in groups.keys() {
            ints.push(rows.iter().map(|r| if &r.group_id == g { r.period } else { 0 }).collect());
        }
    }
    let kept = independent_integer_columns(&ints);
    DMatrix::from_fn(n, kept.len(), |i, j| ints[kept[j]][i] as f64)
}

/// `[a | b]`.
pub fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    DMatrix::from_fn(a.nrows(), a.ncols() + b.ncols(), |i, j| if j < a.ncols() { a[(i, j)] } else { b[(i, j - a.ncols())] })
}

fn columns(panel: &Panel, f: &[fn(&PanelObservation) -> f64]) -> DMatrix<f64> {
    DMatrix::from_fn(panel.len(), f.len(), |i, j| f[j](&panel.rows[i]))
}

pub fn size_terms(panel: &Panel) -> DMatrix<f64> {
    columns(panel, &[|r| r.size, |r| r.size_sq])
}

pub fn outcome(panel: &Panel) -> DVector<f64> {
    DVector::from_iterator(panel.len(), panel.rows.iter().map(|r| r.access))
}

/// Householder QR least squares for a full-column-rank `x`, with a check
/// that the normal equations hold.
pub fn qr_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let qr = x.clone().qr();
    let beta = qr.r().solve_upper_triangular(&(qr.q().transpose() * y)).expect("full-rank design");
    let gradient = (x.transpose() * (y - x * &beta)).amax();
    assert!(gradient < 1e-10 * x.nrows() as f64 * (1.0 + y.amax()), "normal equations off by {gradient:e}");
    beta
}

/// Whether the columns of `a` stay linearly independent after projecting out
/// the columns of `d` (which must have full column rank).
pub fn identified(a: &DMatrix<f64>, d: &DMatrix<f64>) -> bool {
    if a.ncols() + d.ncols() > a.nrows() {
        return false;
    }
    let resid = if d.ncols() == 0 {
        a.clone()
    } else {
        let q = d.clone().qr().q();
        a - &q * (q.transpose() * a)
    };
    let sv = resid.singular_values();
    sv.min() > 1e-7 * a.norm()
}

/// The size terms are identified next to the dummy design.
pub fn size_terms_identified(panel: &Panel, fe: FeSets, trends: bool) -> bool {
    identified(&size_terms(panel), &dummy_design(panel, fe, trends))
}

/// Least squares of `access` on the size terms (plus the covariate) and the
/// explicit dummy design; returns the size-term (and covariate) coefficients.
pub fn dummy_variable_fit(panel: &Panel, fe: FeSets, trends: bool, covariate: bool) -> DVector<f64> {
    let mut real = size_terms(panel);
    if covariate {
        real = hcat(&real, &columns(panel, &[|r| r.presence_abroad]));
    }
    let k = real.ncols();
    let x = hcat(&real, &dummy_design(panel, fe, trends));
    assert!(x.ncols() <= x.nrows(), "more parameters than rows");
    qr_solve(&x, &outcome(panel)).rows(0, k).into_owned()
}

/// CR0 covariance of the size terms, clustered by country, from the full
/// dummy-variable regression: `sum_c s_c s_c'` with `s_c` the cluster sum of
/// the influence rows of `(W'W)^{-1} W'` times residuals.
pub fn dummy_variable_cr0(panel: &Panel, fe: FeSets, trends: bool) -> (DVector<f64>, DMatrix<f64>) {
    let w = hcat(&size_terms(panel), &dummy_design(panel, fe, trends));
    let y = outcome(panel);
    let beta = qr_solve(&w, &y);
    let u = &y - &w * &beta;
    let qr = w.clone().qr();
    let influence = qr.r().solve_upper_triangular(&qr.q().transpose()).expect("full rank");
    let mut by_country: BTreeMap<&str, DVector<f64>> = BTreeMap::new();
    for (i, r) in panel.rows.iter().enumerate() {
        let s = by_country.entry(r.country_id.as_str()).or_insert_with(|| DVector::zeros(2));
        for a in 0..2 {
            s[a] += influence[(a, i)] * u[i];
        }
    }
    let mut v = DMatrix::zeros(2, 2);
    for s in by_country.values() {
        v += s * s.transpose();
    }
    (beta.rows(0, 2).into_owned(), v)
}

/// Two-step 2SLS on the rows with lags. First stage: fitted values of the
/// size terms from their projection on the span of the lagged terms and the
/// dummies, built from an orthonormal basis so a saturated first stage is
/// handled exactly. Second stage: `access` on the fitted values with the
/// dummies partialled out. `None` when the problem is not identified.
pub fn dummy_variable_two_step(panel: &Panel, fe: FeSets, trends: bool) -> Option<DVector<f64>> {
    let sample = Panel::new(panel.rows.iter().filter(|r| r.lag_size.is_some()).cloned().collect());
    if sample.is_empty() {
        return None;
    }
    let z = columns(&sample, &[|r| r.lag_size.unwrap(), |r| r.lag_size_sq.unwrap()]);
    let x = size_terms(&sample);
    let d = dummy_design(&sample, fe, trends);
    if !identified(&z, &d) {
        return None;
    }
    let qd = d.clone().qr().q();
    // Projecting out twice keeps the residual orthogonal to the dummies.
    let net = |a: &DMatrix<f64>| {
        let once = a - &qd * (qd.transpose() * a);
        &once - &qd * (qd.transpose() * &once)
    };
    let qz = net(&z).qr().q();
    let xhat = &qd * (qd.transpose() * &x) + &qz * (qz.transpose() * &x);
    if !identified(&xhat, &d) {
        return None;
    }
    // Second stage net of the dummies. The part of the fitted values outside
    // the dummy span is exactly the instrument projection; subtracting the
    // dummy part numerically would cancel most of the digits.
    let xhat_net = &qz * (qz.transpose() * &x);
    let y = net(&DMatrix::from_column_slice(sample.len(), 1, outcome(&sample).as_slice()));
    Some(qr_solve(&xhat_net, &y.column(0).into_owned()))
}

/// Every FE-ladder combination: the five ladder columns plus the remaining
/// subsets of {country, period, country x period, group} with and without trends.
pub fn fe_combinations() -> Vec<(FeSets, bool)> {
    let mut out = Vec::new();
    for mask in 0..16u8 {
        let fe = FeSets { country: mask & 1 != 0, period: mask & 2 != 0, country_period: mask & 4 != 0, group: mask & 8 != 0 };
        for trends in [false, true] {
            out.push((fe, trends));
        }
    }
    out
}

pub fn spec_for(fe: FeSets, trends: bool) -> RegressionSpec {
    RegressionSpec { fe, group_trends: trends, ..RegressionSpec::default() }
}

/// `(X'X)^{-1} (sum_c X_c' u_c u_c' X_c) (X'X)^{-1}` from explicit inverses
/// and per-cluster residual outer products.
pub fn brute_force_sandwich(x: &DMatrix<f64>, u: &DVector<f64>, clusters: &[usize]) -> DMatrix<f64> {
    let p = x.ncols();
    let bread = (x.transpose() * x).try_inverse().expect("invertible");
    let mut ids: Vec<usize> = clusters.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut meat = DMatrix::zeros(p, p);
    for c in ids {
        let idx: Vec<usize> = (0..x.nrows()).filter(|&i| clusters[i] == c).collect();
        let xc = DMatrix::from_fn(idx.len(), p, |i, j| x[(idx[i], j)]);
        let uc = DVector::from_iterator(idx.len(), idx.iter().map(|&i| u[i]));
        let uu = &uc * uc.transpose();
        meat += xc.transpose() * uu * &xc;
    }
    &bread * meat * &bread
}

/// Normal-equations OLS.
pub fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    (x.transpose() * x).try_inverse().expect("invertible") * x.transpose() * y
}

/// Explicit two-step 2SLS: project `x_endog` on `[z, x_exog]`, then regress
/// `y` on the projections and `x_exog`.
pub fn manual_two_step(y: &DVector<f64>, x_endog: &DMatrix<f64>, x_exog: &DMatrix<f64>, z: &DMatrix<f64>) -> DVector<f64> {
    let n = y.len();
    let w = hcat(z, x_exog);
    let mut fitted = DMatrix::zeros(n, x_endog.ncols() + x_exog.ncols());
    for j in 0..x_endog.ncols() {
        let pi = qr_solve(&w, &x_endog.column(j).into_owned());
        fitted.set_column(j, &(&w * pi));
    }
    for j in 0..x_exog.ncols() {
        fitted.set_column(x_endog.ncols() + j, &x_exog.column(j));
    }
    qr_solve(&fitted, y)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
