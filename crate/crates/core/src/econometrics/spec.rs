use serde::Serialize;

/// Outcome column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Ordinal 0-5 index, treated as cardinal.
    Ordinal,
    /// 1 when the group is not excluded.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LagMode {
    Contemporaneous,
    /// Regress on last period's size terms.
    Lagged,
    /// Instrument current size terms with last period's.
    IvLagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FeSets {
    pub country: bool,
    pub period: bool,
    pub country_period: bool,
    pub group: bool,
}

impl FeSets {
    pub const NONE: FeSets = FeSets { country: false, period: false, country_period: false, group: false };

    pub fn any(&self) -> bool {
        self.country || self.period || self.country_period || self.group
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterBy {
    Country,
    /// Each row its own cluster (heteroskedasticity-robust HC0).
    Observation,
}

/// Reference distribution for tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Normal for single coefficients, chi-squared for joint tests.
    Asymptotic,
    /// t(G - 1) and F(q, G - 1), with G clusters.
    SmallSample,
}

/// Subsample by an institutional split flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsample {
    Openness { high: bool },
    Competitiveness { high: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsorbOptions {
    /// Stop when a full sweep changes no cell by more than this.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for AbsorbOptions {
    fn default() -> Self {
        Self { tolerance: 1e-13, max_sweeps: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionSpec {
    pub outcome: Outcome,
    pub include_presence_abroad: bool,
    pub fe: FeSets,
    pub group_trends: bool,
    pub cluster_by: ClusterBy,
    pub lag_mode: LagMode,
    /// Keep rows whose ordinal access score is at most this value.
    pub max_access: Option<f64>,
    pub subsample: Option<Subsample>,
    /// Multiply the CR0 covariance by `G/(G-1) * (N-1)/(N-K)`.
    pub small_sample_correction: bool,
    pub reference: Reference,
    pub absorb: AbsorbOptions,
}

impl Default for RegressionSpec {
    fn default() -> Self {
        Self {
            outcome: Outcome::Ordinal,
            include_presence_abroad: false,
            fe: FeSets::NONE,
            group_trends: false,
            cluster_by: ClusterBy::Country,
            lag_mode: LagMode::Contemporaneous,
            max_access: None,
            subsample: None,
            small_sample_correction: false,
            reference: Reference::Asymptotic,
            absorb: AbsorbOptions::default(),
        }
    }
}

impl RegressionSpec {
    /// Column `k` (1-5) of the fixed-effects ladder:
    /// none; country + period; country x period; + group; + group trends.
    pub fn ladder(column: usize) -> Option<Self> {
        let fe = match column {
            1 => FeSets::NONE,
            2 => FeSets { country: true, period: true, ..FeSets::NONE },
            3 => FeSets { country_period: true, ..FeSets::NONE },
            4 | 5 => FeSets { country_period: true, group: true, ..FeSets::NONE },
            _ => return None,
        };
        Some(Self { fe, group_trends: column == 5, ..Self::default() })
    }

    pub fn with_lag_mode(mut self, mode: LagMode) -> Self {
        self.lag_mode = mode;
        self
    }

    pub fn restricted(mut self, max_access: f64) -> Self {
        self.max_access = Some(max_access);
        self
    }
}
