use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use camrl::conjunction::{generate_scenario, ConjunctionScenario};
use camrl::drqn::{evaluate, held_out_seeds, EvalMetrics, GreedyAgent, ThresholdBaseline, ZeroPolicy};
use camrl::harness::{
    default_grid, generate_scenario_batch, grid_search, load_scenario_dir, read_metrics, run_training,
    scenario_file_name, scenarios_for, ExperimentConfig, CHECKPOINT_FILE, CONFIG_FILE, METRICS_FILE,
};
use camrl::neural::load_params;
use clap::{Args, Parser, Subcommand};
use log::info;

/// Collision-avoidance scenario generation, DRQN training and evaluation.
#[derive(Parser)]
#[command(name = "camrl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the scenario files a configuration trains on.
    Generate(Flags),
    /// Train an agent and save its config, metrics and checkpoint.
    Train(Flags),
    /// Compare a trained agent with the threshold baseline and a coasting policy.
    Evaluate(Flags),
    /// Grid search over training hyperparameters.
    Sweep(Flags),
    /// Write plot-ready metrics with moving averages for a finished run.
    Export(Flags),
}

#[derive(Args)]
struct Flags {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed overriding the one the subcommand would take from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (the run directory for `evaluate` and `export`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory of scenario files to use instead of generating them.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    /// Training episodes, or evaluation noise seeds for `evaluate`.
    #[arg(long)]
    episodes: Option<usize>,
}

impl Flags {
    fn out(&self) -> Result<&Path> {
        self.out.as_deref().context("--out is required for this command")
    }

    fn load_config(&self, fallback: Option<&Path>) -> Result<ExperimentConfig> {
        match self.config.as_deref().or(fallback) {
            Some(path) => Ok(ExperimentConfig::load(path)?),
            None => Ok(ExperimentConfig::default()),
        }
    }

    fn scenarios(&self, cfg: &ExperimentConfig) -> Result<Vec<ConjunctionScenario>> {
        match &self.scenarios {
            Some(dir) => Ok(load_scenario_dir(dir)?),
            None => Ok(scenarios_for(cfg)?),
        }
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Generate(f) => generate(&f),
        Command::Train(f) => train(&f),
        Command::Evaluate(f) => evaluate_run(&f),
        Command::Sweep(f) => sweep(&f),
        Command::Export(f) => export(&f),
    }
}

fn generate(f: &Flags) -> Result<()> {
    if f.scenarios.is_some() || f.episodes.is_some() {
        bail!("generate takes only --config, --seed and --out");
    }
    let mut cfg = f.load_config(None)?;
    if let Some(seed) = f.seed {
        cfg.scenario.rng_seed = seed;
    }
    let out = f.out()?;
    let n = cfg.train.n_environments;
    if n == 1 {
        std::fs::create_dir_all(out)?;
        let path = out.join(scenario_file_name(0));
        generate_scenario(&cfg.scenario)?.save(&path)?;
        info!("wrote {}", path.display());
    } else {
        let paths = generate_scenario_batch(&cfg.distribution, n, cfg.scenario.rng_seed, out)?;
        info!("wrote {} scenarios to {}", paths.len(), out.display());
    }
    Ok(())
}

fn train(f: &Flags) -> Result<()> {
    let mut cfg = f.load_config(None)?;
    if let Some(seed) = f.seed {
        cfg.train.rng_seed = seed;
    }
    if let Some(n) = f.episodes {
        cfg.train.n_episodes = n;
    }
    cfg.validate()?;
    let scenarios = f.scenarios(&cfg)?;
    let out = f.out()?;
    info!(
        "training {} episodes on {} scenario(s) into {}",
        cfg.train.n_episodes,
        scenarios.len(),
        out.display()
    );
    let artifacts = run_training::<f32>(&cfg, &scenarios, out)?;
    let metrics = read_metrics(&artifacts.metrics_path)?;
    let n = metrics.episodes.len();
    if n > 0 {
        let k = n.min(20);
        info!(
            "mean reward: first {k} episodes {:.2}, last {k} episodes {:.2}",
            metrics.mean_reward(0..k),
            metrics.mean_reward(n - k..n)
        );
    }
    println!("{}", artifacts.checkpoint_path.display());
    Ok(())
}

fn report(name: &str, m: &EvalMetrics) -> String {
    format!(
        "{name:<10} mean_reward {:>12.3}  std {:>10.3}  collision_rate {:.3}  mean_fuel {:.3}",
        m.mean_reward, m.std_reward, m.collision_rate, m.mean_fuel_used
    )
}

fn evaluate_run(f: &Flags) -> Result<()> {
    let run = f.out()?;
    let cfg = f.load_config(Some(&run.join(CONFIG_FILE)))?;
    let params = load_params::<f32>(&run.join(CHECKPOINT_FILE))
        .with_context(|| format!("loading the checkpoint in {}", run.display()))?;
    let scenarios = f.scenarios(&cfg)?;
    let seeds = held_out_seeds(f.seed.unwrap_or(1), f.episodes.unwrap_or(20));
    let mut agent = GreedyAgent::new(params, cfg.env.debris_slots);
    let rows = [
        ("agent", evaluate(&mut agent, &scenarios, &cfg.env, &seeds)?),
        (
            "baseline",
            evaluate(&mut ThresholdBaseline::new(), &scenarios, &cfg.env, &seeds)?,
        ),
        ("coast", evaluate(&mut ZeroPolicy, &scenarios, &cfg.env, &seeds)?),
    ];
    let mut text = String::from("policy,mean_reward,std_reward,collision_rate,mean_fuel_used\n");
    for (name, m) in &rows {
        println!("{}", report(name, m));
        text.push_str(&format!(
            "{name},{},{},{},{}\n",
            m.mean_reward, m.std_reward, m.collision_rate, m.mean_fuel_used
        ));
    }
    std::fs::write(run.join("evaluation.csv"), text)?;
    Ok(())
}

fn sweep(f: &Flags) -> Result<()> {
    let mut cfg = f.load_config(None)?;
    if let Some(n) = f.episodes {
        cfg.train.n_episodes = n;
    }
    let mut spec = cfg.grid.clone().unwrap_or_else(default_grid);
    if let Some(seed) = f.seed {
        spec.master_seed = seed;
    }
    let scenarios = f.scenarios(&cfg)?;
    let out = f.out()?;
    info!("sweeping {} cells x {} repetitions", spec.n_cells(), spec.repetitions);
    let records = grid_search(&spec, &cfg, &scenarios, Some(out), |r| match (&r.summary, &r.error) {
        (Some(s), _) => info!("cell {} rep {}: tail reward {s:.3}", r.cell, r.repetition),
        (_, Some(e)) => info!("cell {} rep {} failed: {e}", r.cell, r.repetition),
        _ => {}
    })?;
    let mut text = String::from("rank,cell,repetition,summary,run_dir,error\n");
    for (rank, r) in records.iter().enumerate() {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rank + 1,
            r.cell,
            r.repetition,
            r.summary.map_or(String::new(), |s| s.to_string()),
            r.run_dir.as_ref().map_or(String::new(), |p| p.display().to_string()),
            r.error.clone().unwrap_or_default().replace(',', ";"),
        ));
    }
    let path = out.join("ranking.csv");
    std::fs::write(&path, text)?;
    println!("{}", path.display());
    Ok(())
}

fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    (0..values.len())
        .map(|k| {
            let tail: Vec<f64> = values[(k + 1).saturating_sub(window)..=k]
                .iter()
                .copied()
                .filter(|v| v.is_finite())
                .collect();
            tail.iter().sum::<f64>() / tail.len() as f64
        })
        .collect()
}

fn export(f: &Flags) -> Result<()> {
    if f.config.is_some() || f.seed.is_some() || f.scenarios.is_some() || f.episodes.is_some() {
        bail!("export takes only --out");
    }
    let run = f.out()?;
    let metrics = read_metrics(&run.join(METRICS_FILE))?;
    let rewards: Vec<f64> = metrics.episodes.iter().map(|e| e.cumulative_reward).collect();
    let losses: Vec<f64> = metrics.episodes.iter().map(|e| e.mean_loss).collect();
    let reward_ma = moving_average(&rewards, 20);
    let loss_ma = moving_average(&losses, 20);
    let mut text = String::from("episode,cumulative_reward,mean_loss,epsilon,reward_ma20,loss_ma20\n");
    for (k, e) in metrics.episodes.iter().enumerate() {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.episode, e.cumulative_reward, e.mean_loss, e.epsilon, reward_ma[k], loss_ma[k]
        ));
    }
    let path = run.join("metrics_plot.csv");
    std::fs::write(&path, text)?;
    println!("{}", path.display());
    Ok(())
}
