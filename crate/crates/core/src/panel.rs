//! Long-form group x country x period panel shared by ingestion, the
//! synthetic generator and the estimators.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::{opt, sig};

pub const PANEL_HEADER: [&str; 12] = [
    "group_id",
    "country_id",
    "period",
    "size",
    "size_sq",
    "access",
    "access_binary",
    "presence_abroad",
    "lag_size",
    "lag_size_sq",
    "high_openness",
    "high_competitiveness",
];

const REQUIRED: [&str; 5] = ["group_id", "country_id", "period", "size", "access"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelObservation {
    pub group_id: String,
    pub country_id: String,
    /// 1-based index on the panel's period grid.
    pub period: i64,
    pub size: f64,
    pub size_sq: f64,
    /// Ordinal access index (period mean when aggregated).
    pub access: f64,
    /// 1 when the group is not excluded from central power.
    pub access_binary: f64,
    pub presence_abroad: f64,
    pub lag_size: Option<f64>,
    pub lag_size_sq: Option<f64>,
    pub high_openness: Option<bool>,
    pub high_competitiveness: Option<bool>,
}

impl PanelObservation {
    pub fn new(group_id: impl Into<String>, country_id: impl Into<String>, period: i64, size: f64, access: f64) -> Self {
        Self {
            group_id: group_id.into(),
            country_id: country_id.into(),
            period,
            size,
            size_sq: size * size,
            access,
            access_binary: if access > 1.0 { 1.0 } else { 0.0 },
            presence_abroad: 0.0,
            lag_size: None,
            lag_size_sq: None,
            high_openness: None,
            high_competitiveness: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Panel {
    pub rows: Vec<PanelObservation>,
}

impl Panel {
    pub fn new(rows: Vec<PanelObservation>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut keys = HashSet::with_capacity(self.rows.len());
        for r in &self.rows {
            if !(0.0..=1.0).contains(&r.size) {
                return Err(Error::InvalidRecord(format!("group {} period {}: size {} outside [0, 1]", r.group_id, r.period, r.size)));
            }
            if (r.size_sq - r.size * r.size).abs() > 1e-12 {
                return Err(Error::InvalidRecord(format!("group {} period {}: size_sq != size^2", r.group_id, r.period)));
            }
            if !keys.insert((r.group_id.as_str(), r.period)) {
                return Err(Error::DuplicateKey { group: r.group_id.clone(), country: r.country_id.clone(), period: r.period });
            }
        }
        Ok(())
    }

    /// Fills `lag_size`/`lag_size_sq` from the previous period of the same
    /// (group, country) key; absent when that period is missing.
    pub fn construct_lags(&mut self) {
        let index: HashMap<(String, String, i64), f64> =
            self.rows.iter().map(|r| ((r.group_id.clone(), r.country_id.clone(), r.period), r.size)).collect();
        for r in &mut self.rows {
            let prev = index.get(&(r.group_id.clone(), r.country_id.clone(), r.period - 1)).copied();
            r.lag_size = prev;
            r.lag_size_sq = prev.map(|s| s * s);
        }
    }

    pub fn countries(&self) -> Vec<&str> {
        let set: std::collections::BTreeSet<&str> = self.rows.iter().map(|r| r.country_id.as_str()).collect();
        set.into_iter().collect()
    }

    pub fn groups(&self) -> Vec<&str> {
        let set: std::collections::BTreeSet<&str> = self.rows.iter().map(|r| r.group_id.as_str()).collect();
        set.into_iter().collect()
    }

    pub fn periods(&self) -> Vec<i64> {
        let set: std::collections::BTreeSet<i64> = self.rows.iter().map(|r| r.period).collect();
        set.into_iter().collect()
    }

    pub fn filter(&self, keep: impl Fn(&PanelObservation) -> bool) -> Panel {
        Panel::new(self.rows.iter().filter(|r| keep(r)).cloned().collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(PANEL_HEADER)?;
        let flag = |b: Option<bool>| match b {
            Some(true) => "1".to_string(),
            Some(false) => "0".to_string(),
            None => String::new(),
        };
        for r in &self.rows {
            wtr.write_record([
                r.group_id.clone(),
                r.country_id.clone(),
                r.period.to_string(),
                sig(r.size, 12),
                sig(r.size_sq, 12),
                sig(r.access, 12),
                sig(r.access_binary, 12),
                sig(r.presence_abroad, 12),
                opt(r.lag_size, 12),
                opt(r.lag_size_sq, 12),
                flag(r.high_openness),
                flag(r.high_competitiveness),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a panel CSV by header name. Only the identifier, period, size and
    /// access columns are required; `size_sq` is recomputed from `size`.
    pub fn read_csv<R: Read>(r: R) -> Result<Panel> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        for name in REQUIRED {
            if col(name).is_none() {
                return Err(Error::MissingColumn(name.to_string()));
            }
        }
        let idx: HashMap<&str, usize> = PANEL_HEADER.iter().filter_map(|&n| col(n).map(|i| (n, i))).collect();
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |name: &str| idx.get(name).and_then(|&i| rec.get(i)).unwrap_or("");
            let num = |name: &str| -> Result<Option<f64>> {
                let s = field(name);
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::InvalidRecord(format!("line {}: column `{name}` has non-numeric value `{s}`", line + 2)))
            };
            let need = |name: &str| -> Result<f64> {
                num(name)?.ok_or_else(|| Error::InvalidRecord(format!("line {}: empty `{name}`", line + 2)))
            };
            let flag = |name: &str| -> Result<Option<bool>> {
                match field(name) {
                    "" => Ok(None),
                    "1" | "true" | "TRUE" | "True" => Ok(Some(true)),
                    "0" | "false" | "FALSE" | "False" => Ok(Some(false)),
                    other => Err(Error::InvalidRecord(format!("line {}: `{name}` is not a flag: `{other}`", line + 2))),
                }
            };
            let period = field("period")
                .parse::<i64>()
                .map_err(|_| Error::InvalidRecord(format!("line {}: bad period `{}`", line + 2, field("period"))))?;
            let size = need("size")?;
            let access = need("access")?;
            let access_binary = num("access_binary")?.unwrap_or(if access > 1.0 { 1.0 } else { 0.0 });
            let lag_size = num("lag_size")?;
            rows.push(PanelObservation {
                group_id: field("group_id").to_string(),
                country_id: field("country_id").to_string(),
                period,
                size,
                size_sq: size * size,
                access,
                access_binary,
                presence_abroad: num("presence_abroad")?.unwrap_or(0.0),
                lag_size,
                lag_size_sq: lag_size.map(|s| s * s),
                high_openness: flag("high_openness")?,
                high_competitiveness: flag("high_competitiveness")?,
            });
        }
        let panel = Panel::new(rows);
        panel.validate()?;
        Ok(panel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Panel {
        let mut rows = vec![
            PanelObservation::new("g1", "c1", 1, 0.2, 1.0),
            PanelObservation::new("g1", "c1", 2, 0.25, 2.0),
            PanelObservation::new("g1", "c1", 4, 0.3, 1.5),
            PanelObservation::new("g2", "c1", 2, 0.1, 0.0),
        ];
        rows[1].high_openness = Some(true);
        let mut p = Panel::new(rows);
        p.construct_lags();
        p
    }

    #[test]
    fn lags_follow_period_grid() {
        let p = sample();
        assert_eq!(p.rows[0].lag_size, None);
        assert_eq!(p.rows[1].lag_size, Some(0.2));
        assert_eq!(p.rows[2].lag_size, None);
        assert_eq!(p.rows[3].lag_size, None);
    }

    #[test]
    fn csv_round_trip() {
        let p = sample();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&PANEL_HEADER.join(",")));
        let back = Panel::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn missing_column_is_named() {
        let text = "group_id,country_id,period,access\ng,c,1,1\n";
        match Panel::read_csv(text.as_bytes()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "size"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_keys_rejected() {
        let p = Panel::new(vec![PanelObservation::new("g", "c", 1, 0.1, 1.0), PanelObservation::new("g", "c", 1, 0.2, 1.0)]);
        assert!(matches!(p.validate(), Err(Error::DuplicateKey { .. })));
    }
}
