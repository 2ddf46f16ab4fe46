//! Run configuration: one TOML document with a section per settings group.
//! Every field has a default, so an empty document is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constraints::GaitProblemConfig;
use crate::error::{GaitError, Result};
use crate::model::RobotParams;
use crate::optimizer::{GaConfig, OptimizerConfig, PenaltyConfig, RefineConfig};
use crate::simulate::SimulationConfig;

/// Seed used when neither the configuration nor the command line sets one.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub robot: RobotParams,
    pub problem: GaitProblemConfig,
    pub ga: GaConfig,
    pub refine: RefineConfig,
    pub penalty: PenaltyConfig,
    pub simulation: SimulationConfig,
    /// Free parameters to start the optimization from.
    pub initial_guess: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            output_dir: PathBuf::from("gait-output"),
            robot: RobotParams::default(),
            problem: GaitProblemConfig::default(),
            ga: GaConfig::default(),
            refine: RefineConfig::default(),
            penalty: PenaltyConfig::default(),
            simulation: SimulationConfig::default(),
            initial_guess: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| GaitError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        self.problem.validate()?;
        self.optimizer().validate()?;
        self.simulation.validate()?;
        if self.output_dir.as_os_str().is_empty() {
            return Err(GaitError::invalid("output_dir must not be empty"));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            ga: self.ga.clone(),
            refine: self.refine.clone(),
            penalty: self.penalty.clone(),
            initial_guess: self.initial_guess.clone(),
        }
    }
}
