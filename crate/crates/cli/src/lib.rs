//! Command implementations behind the `xcity` binary.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_ingest, cmd_phase1, cmd_phase2, cmd_render, cmd_validate, GroupSpec, Outcome};
pub use config::{Overrides, Project, ProjectConfig, Selection};
pub use error::CliError;
