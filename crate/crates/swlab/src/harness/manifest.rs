//! Run manifests: the config echo, every derived seed, and the produced
//! file list. A manifest is enough to reproduce every output byte for
//! byte (wall-clock time excepted).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSeed {
    pub l: usize,
    pub beta: f64,
    pub replica: usize,
    pub field_seed: u64,
    pub chain_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// Which experiment produced this run ("torpid" or "ferro_contrast").
    pub experiment: String,
    pub config: ExperimentConfig,
    /// Base seed after the `SEED` environment override.
    pub base_seed: u64,
    pub replica_seeds: Vec<ReplicaSeed>,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn new(experiment: String, config: ExperimentConfig, base_seed: u64) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment,
            config,
            base_seed,
            replica_seeds: Vec::new(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
            summary: serde_json::Value::Null,
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
