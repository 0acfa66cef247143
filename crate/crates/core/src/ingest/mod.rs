//! Ingestion of EPR Core style group records and Polity style country-year
//! records into the long-form panel.

mod build;
mod epr;
mod grid;
mod polity;
mod status;
mod validate;

pub use build::{build_panel, Aggregation, BuildOutput, PanelBuildOptions};
pub use epr::{expand_years, read_epr, AnnualRow, EprColumns, EprRecord, EprRead};
pub use grid::PeriodGrid;
pub use polity::{attach_openness, read_polity, OpennessOptions, OpennessSummary, PolityColumns, PolityRecord};
pub use status::{code_access, normalize_label, STATUS_LABELS};
pub use validate::{validate_dataset, ReferenceTargets, SampleStats, ValidationReport};

use crate::error::{Error, Result};

/// Position of the first header (trimmed, case-insensitive) matching any candidate.
pub(crate) fn resolve(headers: &csv::StringRecord, logical: &str, candidates: &[String]) -> Result<usize> {
    for c in candidates {
        if let Some(i) = headers.iter().position(|h| h.trim().eq_ignore_ascii_case(c.trim())) {
            return Ok(i);
        }
    }
    Err(Error::MissingColumn(format!("{logical} (tried {})", candidates.join(", "))))
}

pub(crate) fn field(rec: &csv::StringRecord, i: usize) -> &str {
    rec.get(i).unwrap_or("").trim()
}

pub(crate) fn parse_num<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, what: &str, line: u64) -> Result<T> {
    let raw = field(rec, i);
    raw.parse().map_err(|_| Error::InvalidRecord(format!("line {line}: cannot parse {what} `{raw}`")))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}
