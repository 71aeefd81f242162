//! Experiment harness for repeater-chain scalability studies.
//!
//! An [`ExperimentSpec`] (usually loaded from TOML) names a scenario, fixed
//! parameters and optional value grids. [`run_experiment`] evaluates every
//! grid point and returns flat [`SweepRecord`]s plus a [`Summary`], which
//! [`write_outputs`] serializes as CSV or JSON.

pub mod check;
pub mod error;
pub mod output;
pub mod runner;
pub mod spec;

pub use check::{oracle_check, OracleReport};
pub use error::{HarnessError, HarnessResult};
pub use output::{write_outputs, OutputFormat, Summary, SweepRecord, CSV_COLUMNS, SCHEMA_VERSION};
pub use runner::{run_experiment, ExperimentOutput};
pub use spec::{ExperimentSpec, PointParams, Scenario, Symbol};
