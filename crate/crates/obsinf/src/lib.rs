//! Command-line companion to `obsinf-core`: JSON experiment configs, a
//! parallel runner and JSON / CSV reports.

pub mod config;
pub mod report;
pub mod runner;
pub mod trig;

pub use config::{parse_config, ConfigError, ExperimentConfig, Format, Kind};
pub use report::{to_csv, to_json, Report};
pub use runner::{run, Outcome, RunOptions};
