//! Explainable emotion recognition from peripheral physiological signals.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`signal`]: time-series model and per-channel preprocessing
//! - [`ssa`]: singular spectrum analysis
//! - [`features`]: sample entropy, fuzzy entropy and energy per component
//! - [`gbdt`]: gradient-boosted trees with GOSS sampling and random search
//! - [`treeshap`]: exact Shapley values and interactions for tree ensembles
//! - [`eval`]: leave-one-subject-out validation, metrics, Wilcoxon test
//! - [`pipeline`]: ingestion, synthetic data, orchestration and reports
//!
//! Runnable walkthroughs of each stage live in `examples/`.

pub mod error;
pub mod eval;
pub mod features;
pub mod gbdt;
pub mod pipeline;
pub mod signal;
pub mod ssa;
pub mod treeshap;

pub use error::{Error, Result};
