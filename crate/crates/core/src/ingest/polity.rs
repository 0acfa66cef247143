use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::Serialize;

use super::grid::PeriodGrid;
use super::{field, line_of, parse_num, resolve};
use crate::error::{Error, Result};
use crate::panel::Panel;

#[derive(Debug, Clone)]
pub struct PolityColumns {
    pub country_id: Vec<String>,
    pub year: Vec<String>,
    pub xropen: Vec<String>,
    pub xrcomp: Vec<String>,
}

impl Default for PolityColumns {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self { country_id: v(&["ccode", "gwid", "country_id"]), year: v(&["year"]), xropen: v(&["xropen"]), xrcomp: v(&["xrcomp"]) }
    }
}

/// Country-year; `None` for blank or negative (special missing) codes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolityRecord {
    pub country_id: String,
    pub year: i64,
    pub xropen: Option<f64>,
    pub xrcomp: Option<f64>,
}

fn code(rec: &csv::StringRecord, i: usize, what: &str, max: f64, line: u64) -> Result<Option<f64>> {
    if field(rec, i).is_empty() {
        return Ok(None);
    }
    let v: f64 = parse_num(rec, i, what, line)?;
    if v < 0.0 {
        return Ok(None);
    }
    if v > max {
        return Err(Error::InvalidRecord(format!("line {line}: {what} = {v} above {max}")));
    }
    Ok(Some(v))
}

pub fn read_polity<R: Read>(r: R, cols: &PolityColumns) -> Result<Vec<PolityRecord>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let headers = rdr.headers()?.clone();
    let ic = resolve(&headers, "country id", &cols.country_id)?;
    let iy = resolve(&headers, "year", &cols.year)?;
    let io = resolve(&headers, "xropen", &cols.xropen)?;
    let ik = resolve(&headers, "xrcomp", &cols.xrcomp)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        out.push(PolityRecord {
            country_id: field(&rec, ic).to_string(),
            year: parse_num(&rec, iy, "year", line)?,
            xropen: code(&rec, io, "xropen", 4.0, line)?,
            xrcomp: code(&rec, ik, "xrcomp", 3.0, line)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct OpennessOptions {
    pub grid: PeriodGrid,
    /// First year of the historical averages.
    pub start_year: i64,
    pub openness_target: f64,
    pub tolerance: f64,
}

impl Default for OpennessOptions {
    fn default() -> Self {
        Self { grid: PeriodGrid::TEN_YEAR, start_year: 1800, openness_target: 4.0, tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OpennessSummary {
    /// Historical means per (country, period): (xropen, xrcomp).
    pub means: BTreeMap<(String, i64), (Option<f64>, Option<f64>)>,
    pub medians: BTreeMap<i64, f64>,
    pub missing_countries: Vec<String>,
    pub warnings: Vec<String>,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Sets `high_openness` and `high_competitiveness` from historical means of
/// xropen and xrcomp, from `start_year` through the last year of each period.
pub fn attach_openness(panel: &mut Panel, polity: &[PolityRecord], opts: &OpennessOptions) -> Result<OpennessSummary> {
    let mut by_country: BTreeMap<&str, Vec<&PolityRecord>> = BTreeMap::new();
    for r in polity.iter().filter(|r| r.year >= opts.start_year) {
        by_country.entry(r.country_id.as_str()).or_default().push(r);
    }
    let keys: BTreeSet<(String, i64)> = panel.rows.iter().map(|r| (r.country_id.clone(), r.period)).collect();
    let mut summary = OpennessSummary::default();
    let mut missing = BTreeSet::new();
    for (country, period) in &keys {
        let (_, end) = opts.grid.window(*period);
        let Some(records) = by_country.get(country.as_str()) else {
            missing.insert(country.clone());
            continue;
        };
        let mean = |get: fn(&PolityRecord) -> Option<f64>| {
            let vals: Vec<f64> = records.iter().filter(|r| r.year <= end).filter_map(|r| get(r)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        let m = (mean(|r| r.xropen), mean(|r| r.xrcomp));
        if m.0.is_none() && m.1.is_none() {
            missing.insert(country.clone());
        }
        summary.means.insert((country.clone(), *period), m);
    }
    if summary.means.values().all(|(o, c)| o.is_none() && c.is_none()) {
        return Err(Error::AllMissing);
    }
    let mut per_period: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for ((_, period), (_, c)) in &summary.means {
        if let Some(c) = c {
            per_period.entry(*period).or_default().push(*c);
        }
    }
    for (p, mut xs) in per_period {
        summary.medians.insert(p, median(&mut xs));
    }
    for r in &mut panel.rows {
        let (o, c) = summary.means.get(&(r.country_id.clone(), r.period)).copied().unwrap_or((None, None));
        r.high_openness = o.map(|o| (o - opts.openness_target).abs() <= opts.tolerance);
        r.high_competitiveness = c.and_then(|c| summary.medians.get(&r.period).map(|m| c > *m));
    }
    if !missing.is_empty() {
        summary.warnings.push(format!("{} countries lack polity coverage for at least one period", missing.len()));
    }
    summary.missing_countries = missing.into_iter().collect();
    Ok(summary)
}
