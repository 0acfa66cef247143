use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("assumption violated: lambda/(1-lambda) = {ratio} must exceed a1 = {a1}")]
    AssumptionViolated { ratio: f64, a1: f64 },

    #[error("relative size {0} is outside the open interval (0, 1)")]
    Domain(f64),

    #[error("degenerate split: delta = {0} leaves no incumbent group")]
    DegenerateSplit(f64),

    #[error("empty grid")]
    EmptyGrid,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("group shares in country {country}, period {period} exceed 1 after {retries} redraws")]
    ShareOverflow { country: usize, period: usize, retries: usize },

    #[error("empty panel")]
    EmptyPanel,

    #[error("alternating projections did not converge after {sweeps} sweeps (last change {last_change:e})")]
    NonConvergence { sweeps: usize, last_change: f64 },

    #[error("rank deficient design: column `{0}` is collinear with earlier columns")]
    RankDeficient(String),

    #[error("insufficient clusters: {0} (need at least 2)")]
    InsufficientClusters(usize),

    #[error("degenerate first stage: {0}")]
    WeakFirstStage(String),

    #[error("insufficient overlap after lagging: {0}")]
    InsufficientOverlap(String),

    #[error("singular restriction covariance")]
    SingularCovariance,

    #[error("wrong curvature: beta2 = {0} is not negative, no interior peak")]
    WrongCurvature(f64),

    #[error("unknown status label `{0}`")]
    UnknownStatus(String),

    #[error("overlapping spans for group {group} in country {country} at year {year}")]
    OverlappingSpans { group: String, country: String, year: i64 },

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("duplicate panel key: group {group}, country {country}, period {period}")]
    DuplicateKey { group: String, country: String, period: i64 },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("no usable polity observations")]
    AllMissing,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingColumn(_) | Error::Csv(_) | Error::Json(_) | Error::Io(_) => 3,
            _ => 2,
        }
    }
}
