use std::path::{Path, PathBuf};

use super::batch::generate_scenarios;
use super::metrics::write_metrics;
use super::{ExperimentConfig, HarnessError};
use crate::conjunction::{generate_scenario, ConjunctionScenario};
use crate::drqn::{train_with, EpisodeMetrics, TrainOutcome};
use crate::neural::save_params;
use crate::scalar::Scalar;

pub const CONFIG_FILE: &str = "config.toml";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "q_network.bin";

/// Files written by [`run_training`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifacts {
    pub config_path: PathBuf,
    pub metrics_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

/// Training scenarios implied by a configuration: the configured scenario for a
/// single environment, otherwise a batch drawn from the distribution with the
/// scenario seed.
pub fn scenarios_for(cfg: &ExperimentConfig) -> Result<Vec<ConjunctionScenario>, HarnessError> {
    if cfg.train.n_environments == 1 {
        Ok(vec![generate_scenario(&cfg.scenario)?])
    } else {
        generate_scenarios(&cfg.distribution, cfg.train.n_environments, cfg.scenario.rng_seed)
    }
}

/// Trains and writes the resolved config, metrics and online-network checkpoint to `out_dir`.
pub fn run_training<T: Scalar>(
    cfg: &ExperimentConfig,
    scenarios: &[ConjunctionScenario],
    out_dir: &Path,
) -> Result<RunArtifacts, HarnessError> {
    run_training_with::<T>(cfg, scenarios, out_dir, |_| {}).map(|(a, _)| a)
}

pub(crate) fn run_training_with<T: Scalar>(
    cfg: &ExperimentConfig,
    scenarios: &[ConjunctionScenario],
    out_dir: &Path,
    on_episode: impl FnMut(&EpisodeMetrics),
) -> Result<(RunArtifacts, TrainOutcome<T>), HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(HarnessError::io(out_dir))?;
    let artifacts = RunArtifacts {
        config_path: out_dir.join(CONFIG_FILE),
        metrics_path: out_dir.join(METRICS_FILE),
        checkpoint_path: out_dir.join(CHECKPOINT_FILE),
    };
    cfg.save(&artifacts.config_path)?;
    let outcome = train_with::<T>(&cfg.train, &cfg.env, scenarios, on_episode)?;
    write_metrics(&outcome.metrics, &artifacts.metrics_path)?;
    save_params(&outcome.params, &artifacts.checkpoint_path)?;
    Ok((artifacts, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::read_metrics;
    use crate::neural::load_params;

    #[test]
    fn run_is_reconstructible_from_its_config() {
        let mut cfg = ExperimentConfig::default();
        cfg.train.n_episodes = 2;
        cfg.train.hidden_size = 4;
        cfg.train.batch_size = 8;
        cfg.scenario.end_time = 900.0;
        let dir = tempfile::tempdir().unwrap();
        let sc = scenarios_for(&cfg).unwrap();
        let (a, outcome) = run_training_with::<f32>(&cfg, &sc, &dir.path().join("a"), |_| {}).unwrap();
        let reloaded = ExperimentConfig::load(&a.config_path).unwrap();
        assert_eq!(reloaded, cfg);
        let b = run_training::<f32>(&reloaded, &scenarios_for(&reloaded).unwrap(), &dir.path().join("b")).unwrap();
        assert_eq!(
            std::fs::read(&a.metrics_path).unwrap(),
            std::fs::read(&b.metrics_path).unwrap()
        );
        assert_eq!(
            std::fs::read(&a.checkpoint_path).unwrap(),
            std::fs::read(&b.checkpoint_path).unwrap()
        );
        assert_eq!(read_metrics(&a.metrics_path).unwrap().episodes.len(), 2);
        assert!(load_params::<f32>(&a.checkpoint_path)
            .unwrap()
            .bitwise_eq(&outcome.params));
    }

    #[test]
    fn multi_environment_configs_draw_a_batch() {
        let mut cfg = ExperimentConfig::default();
        cfg.train.n_environments = 3;
        assert_eq!(scenarios_for(&cfg).unwrap().len(), 3);
    }
}
