use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::conjunction::{generate_scenario, ConjunctionScenario, ScenarioDistribution};
use crate::seed::derive_seed;

pub fn scenario_file_name(index: usize) -> String {
    format!("scenario_{index:04}.toml")
}

/// `n` scenarios; scenario `k` is drawn from `dist` with a seed derived from `(seed, k)`.
pub fn generate_scenarios(
    dist: &ScenarioDistribution,
    n: usize,
    seed: u64,
) -> Result<Vec<ConjunctionScenario>, HarnessError> {
    if n == 0 {
        return Err(HarnessError::Config("a scenario batch needs n >= 1".into()));
    }
    dist.validate()?;
    (0..n)
        .map(|index| {
            let cfg = dist.sample_config(derive_seed(seed, &[index as u64]));
            generate_scenario(&cfg).map_err(|source| HarnessError::ScenarioBatch { index, source })
        })
        .collect()
}

/// Generates a batch and writes one TOML file per scenario into `out_dir`.
pub fn generate_scenario_batch(
    dist: &ScenarioDistribution,
    n: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let scenarios = generate_scenarios(dist, n, seed)?;
    std::fs::create_dir_all(out_dir).map_err(HarnessError::io(out_dir))?;
    scenarios
        .iter()
        .enumerate()
        .map(|(index, sc)| {
            let path = out_dir.join(scenario_file_name(index));
            sc.save(&path)
                .map_err(|source| HarnessError::ScenarioBatch { index, source })?;
            Ok(path)
        })
        .collect()
}

/// Loads every `*.toml` scenario in `dir`, in file-name order.
pub fn load_scenario_dir(dir: &Path) -> Result<Vec<ConjunctionScenario>, HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(HarnessError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::Config(format!("no scenario files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            ConjunctionScenario::load(p).map_err(|e| HarnessError::Parse {
                path: p.clone(),
                message: e.to_string(),
            })
        })
        .collect()
}
