//! Event-log simplification with a prediction-quality budget.
//!
//! The pipeline: parse or generate an event log, discover its control-flow
//! net, build the performer handover network, cluster performers into
//! resource communities, pick one protected prediction point per community,
//! detect reducible sequence / or / self-loop substructures, measure each
//! fold's impact on remaining-time prediction error, and accept the subset of
//! folds that maximises removed activities while keeping the summed error
//! deviation within a budget.

pub mod boost;
pub mod community;
pub mod discovery;
pub mod error;
pub mod eventlog;
pub mod kmeans;
pub mod optimizer;
pub mod predictor;
pub mod predpoints;
pub mod simplify;
pub mod socialnet;
pub mod util;

#[doc(hidden)]
pub mod testutil;

pub use error::{Error, Result};
