//! Study configuration and command implementations behind the `gridres`
//! binary.

pub mod commands;
pub mod config;

pub use commands::{cmd_report, cmd_risk, cmd_run, cmd_scenarios, cmd_validate, Failure, Finding, Inputs};
pub use config::{ConfigError, Overrides, StudyConfig};
