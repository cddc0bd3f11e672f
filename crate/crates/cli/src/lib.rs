//! Scenario runner for `activeview-core`: runs the pipeline from TOML
//! scenarios, generates synthetic scenes, and compares view strategies.

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

pub use error::CliError;
