//! Reproducibility surface: experiment configuration files, scenario batches,
//! metrics and checkpoint persistence, and grid search.

mod batch;
mod config;
mod grid;
mod metrics;
mod run;

use std::path::PathBuf;

use thiserror::Error;

use crate::conjunction::ConjunctionError;
use crate::drqn::DrqnError;
use crate::neural::NeuralError;

pub use batch::{generate_scenario_batch, generate_scenarios, load_scenario_dir, scenario_file_name};
pub use config::ExperimentConfig;
pub use grid::{default_grid, grid_search, rank_records, GridSpec, RunRecord, SUMMARY_WINDOW};
pub use metrics::{metrics_from_csv, metrics_to_csv, read_metrics, write_metrics, METRICS_HEADER};
pub use run::{run_training, scenarios_for, RunArtifacts, CHECKPOINT_FILE, CONFIG_FILE, METRICS_FILE};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("scenario {index} of the batch failed: {source}")]
    ScenarioBatch { index: usize, source: ConjunctionError },
    #[error(transparent)]
    Conjunction(#[from] ConjunctionError),
    #[error(transparent)]
    Drqn(#[from] DrqnError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }
}
