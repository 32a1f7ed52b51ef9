use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use super::HarnessError;
use crate::conjunction::{ScenarioConfig, ScenarioDistribution};
use crate::drqn::TrainConfig;
use crate::env::EnvConfig;

/// Everything needed to reproduce a run. Stored as TOML with one table per
/// section; omitted sections and fields take their defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub env: EnvConfig,
    /// Scenario of single-environment runs.
    pub scenario: ScenarioConfig,
    /// Source of multi-environment scenario batches.
    pub distribution: ScenarioDistribution,
    pub grid: Option<GridSpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.train.validate()?;
        self.env.validate().map_err(crate::drqn::DrqnError::from)?;
        self.scenario.validate()?;
        self.distribution.validate()?;
        if let Some(grid) = &self.grid {
            grid.validate(&self.train)?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        Self::from_toml(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_toml()?).map_err(HarnessError::io(path))
    }
}
