//! Fixed-effects panel estimators for the quadratic access-on-size equation
//!
//! ```text
//! access = alpha + b1 * size + b2 * size^2 + country/period effects + group effects + e
//! ```
//!
//! with country-clustered covariance, lagged-regressor and lagged-IV
//! variants, joint tests and peak inference.

pub mod absorb;
pub mod design;
pub mod fit;
pub mod inference;
pub mod linalg;
pub mod spec;
pub mod suite;

pub use design::{build_design, Design};
pub use fit::{fit, fit_iv, fit_ols, ols_design, tsls_design, wald_by_name, FirstStage, FitResult, InferenceOptions};
pub use inference::{peak_inference, percentile_of, wald, wald_joint, wald_quadratic_form, PeakEstimate, WaldTest};
pub use spec::{AbsorbOptions, ClusterBy, FeSets, LagMode, Outcome, Reference, RegressionSpec, Subsample};
pub use suite::{replicate_suite, SplitKind, SuiteCell, SuiteData, SuiteMenu, SuiteResults, Variant};
