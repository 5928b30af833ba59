//! Experiment runner behind the command-line tool.
//!
//! An [`ExperimentConfig`] names an environment, an algorithm and the
//! parameter blocks of both; [`run`] trains one policy per seed and writes
//! a CSV per replication plus `aggregate.json` with per-iteration means and
//! 95% intervals. Replications run one after another in seed order, so the
//! output bytes depend only on the config. [`verify`] runs the built-in
//! oracle suites.

mod config;
mod runner;
mod verify;

pub use config::{Algorithm, ExperimentConfig};
pub use runner::{checkpoint_stem, csv_row, run, Band, Replication, RunReport, CSV_HEADER};
pub use verify::{verify, Check, Suite};
