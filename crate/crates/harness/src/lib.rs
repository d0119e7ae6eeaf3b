//! Configuration, orchestration and machine-readable outputs for the
//! exploration experiments. The `explorer` binary is a thin shell over
//! [`cli::run`].

pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod suites;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use manifest::RunManifest;
