use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::epr::AnnualRow;
use super::grid::PeriodGrid;
use crate::error::{Error, Result};
use crate::panel::{Panel, PanelObservation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Aggregation {
    Mean,
    /// Earliest available year within the window.
    First,
}

#[derive(Debug, Clone, Serialize)]
pub struct PanelBuildOptions {
    pub grid: PeriodGrid,
    pub aggregation: Aggregation,
    /// Keep group-periods whose aggregated score is at most 2.
    pub restrict_score_leq_2: bool,
    /// Drop every group that is ever coded IRRELEVANT.
    pub drop_irrelevant: bool,
}

impl Default for PanelBuildOptions {
    fn default() -> Self {
        Self { grid: PeriodGrid::TEN_YEAR, aggregation: Aggregation::Mean, restrict_score_leq_2: true, drop_irrelevant: false }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub panel: Panel,
    /// Number of annual source rows behind each panel row.
    pub source_years: Vec<usize>,
    pub warnings: Vec<String>,
}

fn name_key(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Aggregates annual rows to the period grid, computes lags and presence
/// abroad on the full panel, then applies the score restriction.
pub fn build_panel(annual: &[AnnualRow], opts: &PanelBuildOptions) -> Result<BuildOutput> {
    let mut warnings = Vec::new();
    let irrelevant: BTreeSet<(&str, &str)> = if opts.drop_irrelevant {
        annual.iter().filter(|r| r.status == "IRRELEVANT").map(|r| (r.country_id.as_str(), r.group_id.as_str())).collect()
    } else {
        BTreeSet::new()
    };
    if !irrelevant.is_empty() {
        warnings.push(format!("dropped {} groups coded irrelevant in some year", irrelevant.len()));
    }

    // Group ids that recur across countries are prefixed with the country.
    let mut countries_of: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for r in annual {
        countries_of.entry(r.group_id.as_str()).or_default().insert(r.country_id.as_str());
    }
    let shared = countries_of.values().filter(|c| c.len() > 1).count();
    if shared > 0 {
        warnings.push(format!("{shared} group ids appear in several countries; prefixed with the country id"));
    }

    type Key<'a> = (&'a str, &'a str, i64);
    let mut cells: BTreeMap<Key, Vec<&AnnualRow>> = BTreeMap::new();
    let mut seen_years: HashMap<(&str, &str, i64), ()> = HashMap::new();
    for r in annual {
        if irrelevant.contains(&(r.country_id.as_str(), r.group_id.as_str())) {
            continue;
        }
        if seen_years.insert((r.country_id.as_str(), r.group_id.as_str(), r.year), ()).is_some() {
            return Err(Error::DuplicateKey { group: r.group_id.clone(), country: r.country_id.clone(), period: r.year });
        }
        cells.entry((r.country_id.as_str(), r.group_id.as_str(), opts.grid.period_of(r.year))).or_default().push(r);
    }

    let mut rows = Vec::with_capacity(cells.len());
    let mut source_years = Vec::with_capacity(cells.len());
    let mut names = Vec::with_capacity(cells.len());
    for ((country, group, period), mut years) in cells {
        years.sort_by_key(|r| r.year);
        let (size, access, binary) = match opts.aggregation {
            Aggregation::Mean => {
                let n = years.len() as f64;
                (
                    years.iter().map(|r| r.size).sum::<f64>() / n,
                    years.iter().map(|r| f64::from(r.score)).sum::<f64>() / n,
                    years.iter().filter(|r| r.score > 1).count() as f64 / n,
                )
            }
            Aggregation::First => {
                let r = years[0];
                (r.size, f64::from(r.score), if r.score > 1 { 1.0 } else { 0.0 })
            }
        };
        let id = if countries_of[group].len() > 1 { format!("{country}-{group}") } else { group.to_string() };
        let mut obs = PanelObservation::new(id, country, period, size, access);
        obs.access_binary = binary;
        rows.push(obs);
        source_years.push(years.len());
        names.push(name_key(&years[0].group_name));
    }

    // Same-name groups in other countries, same period.
    let mut totals: HashMap<(&str, i64), f64> = HashMap::new();
    let mut own: HashMap<(&str, &str, i64), f64> = HashMap::new();
    for (r, name) in rows.iter().zip(&names) {
        *totals.entry((name.as_str(), r.period)).or_default() += r.size;
        *own.entry((name.as_str(), r.country_id.as_str(), r.period)).or_default() += r.size;
    }
    let abroad: Vec<f64> = rows
        .iter()
        .zip(&names)
        .map(|(r, name)| (totals[&(name.as_str(), r.period)] - own[&(name.as_str(), r.country_id.as_str(), r.period)]).max(0.0))
        .collect();
    for (r, a) in rows.iter_mut().zip(abroad) {
        r.presence_abroad = a;
    }

    let mut panel = Panel::new(rows);
    panel.construct_lags();
    panel.validate()?;
    let all_periods = panel.periods();

    if opts.restrict_score_leq_2 {
        let keep: Vec<bool> = panel.rows.iter().map(|r| r.access <= 2.0 + 1e-12).collect();
        let mut it = keep.iter();
        panel.rows.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        source_years.retain(|_| *it.next().unwrap());
    }
    let kept_periods: BTreeSet<i64> = panel.periods().into_iter().collect();
    for p in all_periods {
        if !kept_periods.contains(&p) {
            let (a, b) = opts.grid.window(p);
            warnings.push(format!("period {p} ({a}-{b}) has no observations after restriction"));
        }
    }
    Ok(BuildOutput { panel, source_years, warnings })
}
