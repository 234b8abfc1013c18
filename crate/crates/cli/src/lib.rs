//! Scenario ingestion and report emission for `freebound`.
//!
//! Exit status: 0 when every selected check holds, 1 when an inequality,
//! identity, hypothesis or finiteness check fails, 2 when the config or the
//! scenario is invalid.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{execute, Cli, Command, Flags, Output};
pub use config::ScenarioConfig;
pub use error::CliError;
pub use report::ReportDocument;
