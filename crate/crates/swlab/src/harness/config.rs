//! Experiment configuration: a JSON document that pins everything a run
//! depends on. The `SEED` environment variable, when set, overrides the
//! configured base seed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::disorder::{CouplingDistribution, Pinning};
use crate::error::{Result, SwError};

/// Where the quenched couplings come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSource {
    /// A coupling-field file whose metadata carries the gadget placements.
    File { path: PathBuf },
    /// Per level `l`: a box of side `4l + 2*margin` with background
    /// couplings sampled from `background` (seeded from the base seed) and
    /// one gadget planted at the box center.
    Generated { dim: usize, margin: usize, background: CouplingDistribution },
}

/// Gadget parameters shared by every planted level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GadgetTemplate {
    pub delta: f64,
    pub s: f64,
    pub rho_d: f64,
    pub pinning: Pinning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub field: FieldSource,
    pub betas: Vec<f64>,
    pub ls: Vec<usize>,
    pub replicas: usize,
    pub sweeps: u64,
    pub burn_in: u64,
    pub observables: Vec<String>,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    pub gadget: GadgetTemplate,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.gadget;
        if !(g.delta > 0.0 && g.delta < 0.5) {
            return Err(SwError::Parameter(format!(
                "gadget delta must be in (0, 1/2), got {}",
                g.delta
            )));
        }
        if !(g.s > 0.0 && g.s < 1.0 - 2.0 * g.delta) {
            return Err(SwError::Parameter(format!(
                "gadget s must be in (0, {}), got {}",
                1.0 - 2.0 * g.delta,
                g.s
            )));
        }
        if !(g.rho_d > 0.0 && g.rho_d <= 1.0) {
            return Err(SwError::Parameter(format!(
                "gadget rho_d must be in (0, 1], got {}",
                g.rho_d
            )));
        }
        if self.replicas == 0 {
            return Err(SwError::Parameter("replicas must be >= 1".into()));
        }
        if self.betas.is_empty() || self.betas.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
            return Err(SwError::Parameter("betas must be a nonempty list of finite values >= 0".into()));
        }
        if self.ls.is_empty() || self.ls.iter().any(|&l| l < 2) {
            return Err(SwError::Parameter("ls must be a nonempty list of values >= 2".into()));
        }
        if let FieldSource::Generated { dim, .. } = &self.field {
            if *dim < 1 {
                return Err(SwError::Parameter("generated field dimension must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// The configured base seed, unless the `SEED` environment variable
    /// overrides it.
    pub fn effective_base_seed(&self) -> Result<u64> {
        resolve_base_seed(self.base_seed)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Apply the documented `SEED` environment override.
pub fn resolve_base_seed(configured: u64) -> Result<u64> {
    match std::env::var("SEED") {
        Ok(text) => text.trim().parse::<u64>().map_err(|e| {
            SwError::Parameter(format!("SEED environment variable {text:?} is not a u64: {e}"))
        }),
        Err(_) => Ok(configured),
    }
}

/// A runnable starting point for the torpidity experiment.
pub fn default_torpid_config() -> ExperimentConfig {
    ExperimentConfig {
        field: FieldSource::Generated {
            dim: 2,
            margin: 2,
            background: CouplingDistribution::Uniform,
        },
        betas: vec![8.0],
        ls: vec![2, 3, 4],
        replicas: 8,
        sweeps: 100_000,
        burn_in: 1_000,
        observables: vec!["s_plus".into(), "s_minus".into(), "accordance".into()],
        base_seed: 0x5EED_2026,
        out_dir: PathBuf::from("out/torpid"),
        gadget: GadgetTemplate {
            delta: 0.25,
            s: 0.4995,
            rho_d: 0.5,
            pinning: Pinning::Midpoint,
        },
    }
}

/// A runnable starting point for the exact ferro-contrast curves.
pub fn default_ferro_contrast_config() -> ExperimentConfig {
    ExperimentConfig {
        field: FieldSource::Generated {
            dim: 2,
            margin: 0,
            background: CouplingDistribution::Constant { value: 1.0 },
        },
        betas: vec![0.5, 1.0, 2.0, 4.0, 8.0],
        ls: vec![2],
        replicas: 1,
        sweeps: 100_000,
        burn_in: 1_000,
        observables: vec!["aligned".into()],
        base_seed: 0x5EED_2026,
        out_dir: PathBuf::from("out/ferro_contrast"),
        gadget: GadgetTemplate {
            delta: 0.25,
            s: 0.4995,
            rho_d: 0.5,
            pinning: Pinning::Midpoint,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_configs_validate() {
        default_torpid_config().validate().unwrap();
        default_ferro_contrast_config().validate().unwrap();
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let mut c = default_torpid_config();
        c.gadget.delta = 0.6;
        assert!(c.validate().is_err());

        let mut c = default_torpid_config();
        c.gadget.s = 0.7; // outside (0, 1 - 2*0.25)
        assert!(c.validate().is_err());

        let mut c = default_torpid_config();
        c.ls = vec![1];
        assert!(c.validate().is_err());

        let mut c = default_torpid_config();
        c.replicas = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_files_round_trip() {
        let dir = std::env::temp_dir().join("swlab-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("torpid.json");
        let c = default_torpid_config();
        c.save(&path).unwrap();
        assert_eq!(ExperimentConfig::load(&path).unwrap(), c);
    }
}
