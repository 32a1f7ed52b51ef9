use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::read_metrics;
use super::run::run_training;
use super::{ExperimentConfig, HarnessError};
use crate::conjunction::ConjunctionScenario;
use crate::drqn::{train, TrainConfig, TrainingMetrics};
use crate::seed::derive_seed;

/// Episodes at the end of a run whose mean reward ranks the run.
pub const SUMMARY_WINDOW: usize = 20;

/// Candidate values per `TrainConfig` field; cells are the Cartesian product
/// in field-name order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub values: BTreeMap<String, Vec<toml::Value>>,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub master_seed: u64,
}

fn one() -> usize {
    1
}

/// Batch sizes and hidden widths of both published settings, with learning
/// rates and soft-update rates around them.
pub fn default_grid() -> GridSpec {
    let ints = |v: &[i64]| v.iter().map(|&x| toml::Value::Integer(x)).collect();
    let floats = |v: &[f64]| v.iter().map(|&x| toml::Value::Float(x)).collect();
    GridSpec {
        values: BTreeMap::from([
            ("batch_size".to_string(), ints(&[50, 100])),
            ("tau".to_string(), floats(&[0.05, 0.1, 0.5])),
            ("learning_rate".to_string(), floats(&[1e-3, 1e-4])),
            ("hidden_size".to_string(), ints(&[64, 128])),
        ]),
        repetitions: 1,
        master_seed: 0,
    }
}

impl GridSpec {
    pub fn n_cells(&self) -> usize {
        self.values.values().map(Vec::len).product()
    }

    /// Field assignments of cell `index`, last field varying fastest.
    pub fn cell(&self, mut index: usize) -> Vec<(&str, &toml::Value)> {
        let mut out: Vec<(&str, &toml::Value)> = Vec::with_capacity(self.values.len());
        for (name, candidates) in self.values.iter().rev() {
            out.push((name.as_str(), &candidates[index % candidates.len()]));
            index /= candidates.len();
        }
        out.reverse();
        out
    }

    /// `base` with the assignments of `cell` applied.
    pub fn resolve(&self, base: &TrainConfig, cell: usize) -> Result<TrainConfig, HarnessError> {
        let mut table = toml::Table::try_from(base).map_err(|e| HarnessError::Config(e.to_string()))?;
        for (name, value) in self.cell(cell) {
            if name == "rng_seed" {
                return Err(HarnessError::Config(
                    "rng_seed is derived per cell and cannot be gridded".into(),
                ));
            }
            // Integers are accepted where floats are expected.
            let value = match (table.get(name), value) {
                (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(*i as f64),
                _ => value.clone(),
            };
            table.insert(name.to_string(), value);
        }
        let cfg: TrainConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(format!("grid cell {cell}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self, base: &TrainConfig) -> Result<(), HarnessError> {
        if self.values.is_empty() || self.values.values().any(Vec::is_empty) || self.repetitions == 0 {
            return Err(HarnessError::Config(
                "grid needs at least one field, one value per field and one repetition".into(),
            ));
        }
        let known = toml::Table::try_from(base).map_err(|e| HarnessError::Config(e.to_string()))?;
        if let Some(name) = self
            .values
            .keys()
            .find(|k| !known.contains_key(*k) && *k != "epsilon_decay_episodes")
        {
            return Err(HarnessError::Config(format!(
                "grid field {name} is not a training parameter"
            )));
        }
        for cell in 0..self.n_cells() {
            self.resolve(base, cell)?;
        }
        Ok(())
    }

    /// Seed of repetition `rep` of cell `cell`.
    pub fn cell_seed(&self, cell: usize, rep: usize) -> u64 {
        derive_seed(self.master_seed, &[cell as u64, rep as u64])
    }
}

/// One grid cell repetition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: usize,
    pub repetition: usize,
    pub config: TrainConfig,
    /// Mean cumulative reward of the final [`SUMMARY_WINDOW`] episodes; absent for failed runs.
    pub summary: Option<f64>,
    pub error: Option<String>,
    pub run_dir: Option<PathBuf>,
}

/// Successful runs by descending summary, then failed runs; ties keep grid order.
pub fn rank_records(mut records: Vec<RunRecord>) -> Vec<RunRecord> {
    records.sort_by(|a, b| match (a.summary, b.summary) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    records
}

fn summarize(metrics: &TrainingMetrics) -> f64 {
    metrics.tail_reward(SUMMARY_WINDOW)
}

/// Trains every cell of `spec` on `scenarios` and ranks the runs. With
/// `out_dir`, each run persists its artifacts under `cell_<i>_rep_<r>` and is
/// summarized from the metrics file it wrote.
pub fn grid_search(
    spec: &GridSpec,
    base: &ExperimentConfig,
    scenarios: &[ConjunctionScenario],
    out_dir: Option<&Path>,
    mut on_run: impl FnMut(&RunRecord),
) -> Result<Vec<RunRecord>, HarnessError> {
    spec.validate(&base.train)?;
    let mut records = Vec::with_capacity(spec.n_cells() * spec.repetitions);
    for cell in 0..spec.n_cells() {
        for repetition in 0..spec.repetitions {
            let config = TrainConfig {
                rng_seed: spec.cell_seed(cell, repetition),
                ..spec.resolve(&base.train, cell)?
            };
            let mut record = RunRecord {
                cell,
                repetition,
                config: config.clone(),
                summary: None,
                error: None,
                run_dir: None,
            };
            let outcome = match out_dir {
                Some(dir) => {
                    let run_dir = dir.join(format!("cell_{cell:03}_rep_{repetition:02}"));
                    let experiment = ExperimentConfig {
                        train: config,
                        grid: None,
                        ..base.clone()
                    };
                    record.run_dir = Some(run_dir.clone());
                    run_training::<f32>(&experiment, scenarios, &run_dir).and_then(|a| read_metrics(&a.metrics_path))
                }
                None => train::<f32>(&config, &base.env, scenarios)
                    .map(|o| o.metrics)
                    .map_err(HarnessError::from),
            };
            match outcome {
                Ok(metrics) => record.summary = Some(summarize(&metrics)),
                // A diverging cell is a result, not a reason to stop the sweep.
                Err(HarnessError::Drqn(e)) => record.error = Some(e.to_string()),
                Err(e) => return Err(e),
            }
            on_run(&record);
            records.push(record);
        }
    }
    Ok(rank_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjunction::generate_scenario;

    fn tiny_base() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.train.n_episodes = 3;
        cfg.train.hidden_size = 4;
        cfg.train.batch_size = 4;
        cfg.scenario.end_time = 600.0;
        cfg
    }

    fn scenarios(cfg: &ExperimentConfig) -> Vec<ConjunctionScenario> {
        vec![generate_scenario(&cfg.scenario).unwrap()]
    }

    #[test]
    fn cells_enumerate_the_product() {
        let g = default_grid();
        assert_eq!(g.n_cells(), 24);
        let base = TrainConfig::default();
        let last = g.resolve(&base, 23).unwrap();
        assert_eq!(
            (last.batch_size, last.hidden_size, last.learning_rate, last.tau),
            (100, 128, 1e-4, 0.5)
        );
        let first = g.resolve(&base, 0).unwrap();
        assert_eq!(
            (first.batch_size, first.hidden_size, first.learning_rate, first.tau),
            (50, 64, 1e-3, 0.05)
        );
        g.validate(&base).unwrap();
    }

    #[test]
    fn unknown_or_mistyped_fields_are_rejected() {
        let base = TrainConfig::default();
        let mut g = default_grid();
        g.values.insert("batch".into(), vec![toml::Value::Integer(3)]);
        assert!(g.validate(&base).is_err());
        let mut g = default_grid();
        g.values.insert("batch_size".into(), vec![toml::Value::Float(2.5)]);
        assert!(g.validate(&base).is_err());
        let mut g = default_grid();
        g.values.insert("tau".into(), vec![toml::Value::Float(3.0)]);
        assert!(g.validate(&base).is_err());
    }

    #[test]
    fn single_cell_matches_direct_training() {
        let base = tiny_base();
        let sc = scenarios(&base);
        let spec = GridSpec {
            values: BTreeMap::from([("tau".to_string(), vec![toml::Value::Float(0.1)])]),
            repetitions: 1,
            master_seed: 5,
        };
        let records = grid_search(&spec, &base, &sc, None, |_| {}).unwrap();
        assert_eq!(records.len(), 1);
        let direct = train::<f32>(
            &TrainConfig {
                rng_seed: spec.cell_seed(0, 0),
                ..base.train.clone()
            },
            &base.env,
            &sc,
        )
        .unwrap();
        assert_eq!(records[0].summary, Some(direct.metrics.tail_reward(SUMMARY_WINDOW)));
    }

    #[test]
    fn sweep_persists_and_is_reproducible() {
        let base = tiny_base();
        let sc = scenarios(&base);
        let spec = GridSpec {
            values: BTreeMap::from([
                (
                    "batch_size".to_string(),
                    vec![toml::Value::Integer(4), toml::Value::Integer(8)],
                ),
                ("tau".to_string(), vec![toml::Value::Float(0.1)]),
            ]),
            repetitions: 1,
            master_seed: 1,
        };
        let dir = tempfile::tempdir().unwrap();
        let a = grid_search(&spec, &base, &sc, Some(dir.path()), |_| {}).unwrap();
        let b = grid_search(&spec, &base, &sc, None, |_| {}).unwrap();
        assert_eq!(a.len(), 2);
        let key = |r: &RunRecord| (r.cell, r.summary);
        assert_eq!(
            a.iter().map(key).collect::<Vec<_>>(),
            b.iter().map(key).collect::<Vec<_>>()
        );
        assert!(a[0].summary >= a[1].summary);
        for r in &a {
            let m = read_metrics(&r.run_dir.as_ref().unwrap().join(super::super::METRICS_FILE)).unwrap();
            assert_eq!(m.episodes.len(), 3);
        }
    }

    #[test]
    fn failed_runs_rank_last() {
        let rec = |cell, summary| RunRecord {
            cell,
            repetition: 0,
            config: TrainConfig::default(),
            summary,
            error: summary.is_none().then(|| "diverged".to_string()),
            run_dir: None,
        };
        let ranked = rank_records(vec![
            rec(0, None),
            rec(1, Some(-5.0)),
            rec(2, Some(-1.0)),
            rec(3, Some(-5.0)),
        ]);
        assert_eq!(ranked.iter().map(|r| r.cell).collect::<Vec<_>>(), vec![2, 1, 3, 0]);
    }
}
