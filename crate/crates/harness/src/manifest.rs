//! Run manifests: everything needed to reproduce a run's outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::write_json;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubSeed {
    pub label: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool_version: String,
    pub subcommand: String,
    pub config: ExperimentConfig,
    pub sub_seeds: Vec<SubSeed>,
    /// Seconds since the epoch, taken from `SOURCE_DATE_EPOCH` (0 if unset)
    /// so repeated runs stay byte-identical.
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &ExperimentConfig, sub_seeds: Vec<SubSeed>) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            config: config.clone(),
            sub_seeds,
            created_unix: source_date_epoch(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}

fn source_date_epoch() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}
