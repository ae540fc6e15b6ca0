//! Experiment runner around [`impctl_core`]: TOML configuration, concurrent
//! batch runs, CSV logs, JSON summaries and the `impctl` command line tool.

pub mod batch;
pub mod check;
pub mod config;
pub mod csvlog;
pub mod experiment;
pub mod report;

pub use crate::config::{parse_config, parse_config_str, read_config, ConfigError, ExperimentConfig};
pub use crate::experiment::{run_experiment, ExperimentOutcome, RunKey};
