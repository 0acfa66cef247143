use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::panel::Panel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub n: usize,
    pub size_mean: f64,
    pub size_sd: f64,
    pub access_mean: f64,
    pub access_sd: f64,
}

fn mean_sd(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl SampleStats {
    pub fn of(panel: &Panel) -> Self {
        let (size_mean, size_sd) = mean_sd(panel.rows.iter().map(|r| r.size));
        let (access_mean, access_sd) = mean_sd(panel.rows.iter().map(|r| r.access));
        Self { n: panel.len(), size_mean, size_sd, access_mean, access_sd }
    }
}

/// Published descriptive targets with tolerances.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceTargets {
    pub groups: usize,
    pub countries: usize,
    pub full_access: (f64, f64),
    pub full_tolerance: f64,
    pub restricted_size: (f64, f64),
    pub restricted_access: (f64, f64),
    pub restricted_tolerance: f64,
}

impl ReferenceTargets {
    /// 10-year mean panel of EPR Core 2018.
    pub fn epr_core_2018() -> Self {
        Self {
            groups: 569,
            countries: 175,
            full_access: (1.545, 1.216),
            full_tolerance: 0.01,
            restricted_size: (0.117, 0.224),
            restricted_access: (1.036, 0.575),
            restricted_tolerance: 0.005,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub full: SampleStats,
    pub restricted: SampleStats,
    pub n_groups: usize,
    pub n_countries: usize,
    pub n_periods: usize,
    /// Country-periods whose group sizes sum above 1.
    pub size_sum_over_one: usize,
    pub max_size_sum: f64,
    pub warnings: Vec<String>,
}

fn check(warnings: &mut Vec<String>, what: &str, got: f64, want: f64, tol: f64) {
    if (got - want).abs() > tol {
        warnings.push(format!("{what}: {got:.4} differs from {want} by more than {tol}"));
    }
}

/// Descriptive report on an unrestricted panel; mismatches against
/// `targets` become warnings.
pub fn validate_dataset(panel: &Panel, targets: Option<&ReferenceTargets>) -> ValidationReport {
    let restricted = panel.filter(|r| r.access <= 2.0 + 1e-12);
    let mut sums: BTreeMap<(&str, i64), f64> = BTreeMap::new();
    for r in &panel.rows {
        *sums.entry((r.country_id.as_str(), r.period)).or_default() += r.size;
    }
    let mut report = ValidationReport {
        full: SampleStats::of(panel),
        restricted: SampleStats::of(&restricted),
        n_groups: panel.groups().len(),
        n_countries: panel.countries().len(),
        n_periods: panel.periods().len(),
        size_sum_over_one: sums.values().filter(|&&s| s > 1.0 + 1e-6).count(),
        max_size_sum: sums.values().copied().fold(0.0, f64::max),
        warnings: Vec::new(),
    };
    if report.size_sum_over_one > 0 {
        report.warnings.push(format!("{} country-periods have sizes summing above 1", report.size_sum_over_one));
    }
    if let Some(t) = targets {
        let w = &mut report.warnings;
        if report.n_groups != t.groups {
            w.push(format!("groups: {} (reference {})", report.n_groups, t.groups));
        }
        if report.n_countries != t.countries {
            w.push(format!("countries: {} (reference {})", report.n_countries, t.countries));
        }
        check(w, "full access mean", report.full.access_mean, t.full_access.0, t.full_tolerance);
        check(w, "full access sd", report.full.access_sd, t.full_access.1, t.full_tolerance);
        check(w, "restricted size mean", report.restricted.size_mean, t.restricted_size.0, t.restricted_tolerance);
        check(w, "restricted size sd", report.restricted.size_sd, t.restricted_size.1, t.restricted_tolerance);
        check(w, "restricted access mean", report.restricted.access_mean, t.restricted_access.0, t.restricted_tolerance);
        check(w, "restricted access sd", report.restricted.access_sd, t.restricted_access.1, t.restricted_tolerance);
    }
    report
}

impl ValidationReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let line = |s: &mut String, label: &str, st: &SampleStats| {
            let _ = writeln!(
                s,
                "{label:<11} n={:<6} size mean {:.4} sd {:.4}  access mean {:.4} sd {:.4}",
                st.n, st.size_mean, st.size_sd, st.access_mean, st.access_sd
            );
        };
        line(&mut s, "full", &self.full);
        line(&mut s, "restricted", &self.restricted);
        let _ = writeln!(s, "groups {}  countries {}  periods {}", self.n_groups, self.n_countries, self.n_periods);
        let _ = writeln!(s, "size sums: {} country-periods above 1, max {:.4}", self.size_sum_over_one, self.max_size_sum);
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}
