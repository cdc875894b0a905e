//! Configuration, seeded experiment runner and report emission for the
//! `qbayes` command line tool.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{load_config, parse_config, Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use report::{emit_report, Format, RunReport};
pub use run::{run_experiment, Command};
