//! Estimators and data machinery for repression-mobilization event analysis.
//!
//! The crate covers the full desk-scale workflow: ACLED-style event ingestion
//! into national daily series and division-day panels, leakage-safe feature
//! engineering, pooled OLS and negative binomial regression, two-way
//! fixed-effects panel models with structural-break interactions, ADF/VAR/IRF
//! time-series analysis, regression-tree ensembles with gain importance, and
//! walk-forward out-of-sample evaluation. Seeded synthetic data generators
//! act as ground-truth oracles for every estimator.
//!
//! The [`pipeline`] module chains the stages behind a single JSON
//! configuration and emits a machine-diffable replication report.

pub mod error;
pub mod features;
pub mod glm;
pub mod ingest;
pub mod ols;
pub mod panel;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod trees;
pub mod tsa;
pub mod walkforward;

pub(crate) mod linalg;

pub use error::{Error, Result};
