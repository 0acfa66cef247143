use std::collections::BTreeMap;
use std::io::Read;

use serde::Serialize;

use super::status::{code_access, normalize_label};
use super::{field, line_of, parse_num, resolve};
use crate::error::{Error, Result};

/// Header candidates for each logical EPR column, tried in order.
#[derive(Debug, Clone)]
pub struct EprColumns {
    pub group_id: Vec<String>,
    pub country_id: Vec<String>,
    pub from: Vec<String>,
    pub to: Vec<String>,
    pub group: Vec<String>,
    pub size: Vec<String>,
    pub status: Vec<String>,
    /// Drop records with unrecognized statuses (with a warning) instead of failing.
    pub skip_unknown_status: bool,
}

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl Default for EprColumns {
    fn default() -> Self {
        Self {
            group_id: names(&["gwgroupid", "groupid", "group_id"]),
            country_id: names(&["gwid", "country_id"]),
            from: names(&["from"]),
            to: names(&["to"]),
            group: names(&["group", "group_name"]),
            size: names(&["size"]),
            status: names(&["status"]),
            skip_unknown_status: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EprRecord {
    pub group_id: String,
    pub country_id: String,
    pub from: i64,
    pub to: i64,
    pub group_name: String,
    pub size: f64,
    /// Normalized status label.
    pub status: String,
    pub score: u8,
}

#[derive(Debug, Clone, Default)]
pub struct EprRead {
    pub records: Vec<EprRecord>,
    pub warnings: Vec<String>,
}

pub fn read_epr<R: Read>(r: R, cols: &EprColumns) -> Result<EprRead> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let headers = rdr.headers()?.clone();
    let ig = resolve(&headers, "group id", &cols.group_id)?;
    let ic = resolve(&headers, "country id", &cols.country_id)?;
    let ifrom = resolve(&headers, "year from", &cols.from)?;
    let ito = resolve(&headers, "year to", &cols.to)?;
    let iname = resolve(&headers, "group name", &cols.group)?;
    let isize = resolve(&headers, "size", &cols.size)?;
    let istatus = resolve(&headers, "status", &cols.status)?;

    let mut out = EprRead::default();
    let mut skipped: BTreeMap<String, usize> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let raw_status = field(&rec, istatus);
        let score = match code_access(raw_status) {
            Ok(s) => s,
            Err(e) if cols.skip_unknown_status => {
                let _ = e;
                *skipped.entry(normalize_label(raw_status)).or_default() += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let from: i64 = parse_num(&rec, ifrom, "year from", line)?;
        let to: i64 = parse_num(&rec, ito, "year to", line)?;
        let size: f64 = parse_num(&rec, isize, "size", line)?;
        if from > to {
            return Err(Error::InvalidRecord(format!("line {line}: span {from}-{to} is reversed")));
        }
        if !(0.0..=1.0).contains(&size) {
            return Err(Error::InvalidRecord(format!("line {line}: size {size} outside [0, 1]")));
        }
        out.records.push(EprRecord {
            group_id: field(&rec, ig).to_string(),
            country_id: field(&rec, ic).to_string(),
            from,
            to,
            group_name: field(&rec, iname).to_string(),
            size,
            status: normalize_label(raw_status),
            score,
        });
    }
    for (label, n) in skipped {
        out.warnings.push(format!("skipped {n} records with unknown status `{label}`"));
    }
    Ok(out)
}

/// One group-country-year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnualRow {
    pub group_id: String,
    pub country_id: String,
    pub group_name: String,
    pub year: i64,
    pub size: f64,
    pub status: String,
    pub score: u8,
}

/// Inclusive spans to annual rows, ordered by country, group and year.
/// Returns the rows and any coverage warnings.
pub fn expand_years(records: &[EprRecord]) -> Result<(Vec<AnnualRow>, Vec<String>)> {
    let mut by_key: BTreeMap<(&str, &str), Vec<&EprRecord>> = BTreeMap::new();
    for r in records {
        by_key.entry((r.country_id.as_str(), r.group_id.as_str())).or_default().push(r);
    }
    let mut rows = Vec::new();
    let mut outside = 0usize;
    for ((country, group), mut spans) in by_key {
        spans.sort_by_key(|r| (r.from, r.to));
        let mut last_to: Option<i64> = None;
        for r in spans {
            if let Some(prev) = last_to {
                if r.from <= prev {
                    return Err(Error::OverlappingSpans { group: group.to_string(), country: country.to_string(), year: r.from });
                }
            }
            last_to = Some(r.to);
            if r.from < 1946 || r.to > 2017 {
                outside += 1;
            }
            for year in r.from..=r.to {
                rows.push(AnnualRow {
                    group_id: r.group_id.clone(),
                    country_id: r.country_id.clone(),
                    group_name: r.group_name.clone(),
                    year,
                    size: r.size,
                    status: r.status.clone(),
                    score: r.score,
                });
            }
        }
    }
    let warnings = if outside > 0 { vec![format!("{outside} spans extend outside 1946-2017")] } else { vec![] };
    Ok((rows, warnings))
}
