//! Experiment harness: config parsing, experiment dispatch, and
//! deterministic table emission for the `mqed` binary.

pub mod config;
pub mod emit;
pub mod run;

pub use config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind, RawConfig};
pub use emit::{emit, Cell, RunResult};
pub use run::{run_experiment, RunError};
