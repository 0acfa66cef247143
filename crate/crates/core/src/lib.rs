//! Group size and access to state power.
//!
//! - [`model`]: the two-period limit-or-share contest game, its decision
//!   functions, analytic thresholds and curve sweeps.
//! - [`synth`]: synthetic panels with known ground truth.
//! - [`econometrics`]: fixed-effects, lagged and 2SLS estimators of the
//!   quadratic access-on-size equation with country-clustered inference.
//! - [`ingest`]: EPR-style and Polity-style CSV ingestion and panel building.
//! - [`plot`]: minimal SVG figures.
//! - [`cli`]: the `powersharing` command-line front end.

// Negated comparisons below also reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod econometrics;
pub mod error;
pub mod fmt;
pub mod ingest;
pub mod model;
pub mod panel;
pub mod plot;
pub mod synth;

pub use error::{Error, Result};
pub use panel::{Panel, PanelObservation};
