//! Command-line front end for the walk library: strict experiment configs,
//! orchestration of simulations and reports, and reproducible output
//! directories with run manifests.

pub mod checkpoints;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

pub use commands::{execute, replay, Invocation, Overrides, Task};
pub use config::ExperimentConfig;
pub use error::CliError;
pub use manifest::RunManifest;
