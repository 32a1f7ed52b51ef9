use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::learner::{train_step, StepConfig};
use super::policy::GreedyAgent;
use super::replay::{Experience, ReplayBuffer};
use super::DrqnError;
use crate::conjunction::ConjunctionScenario;
use crate::env::{CollisionAvoidanceEnv, EnvConfig, N_ACTIONS};
use crate::neural::{NetworkShape, OptimizerState, QNetworkParams};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng_from};

/// Summary of one training episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub cumulative_reward: f64,
    /// Mean loss of the updates made during the episode; NaN when none were made.
    pub mean_loss: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingMetrics {
    pub episodes: Vec<EpisodeMetrics>,
    /// Not part of the persisted metrics: it differs between identical runs.
    pub wall_clock_secs: f64,
}

impl TrainingMetrics {
    /// Mean cumulative reward over episodes `range`, clamped to what exists.
    pub fn mean_reward(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.episodes[range.start.min(self.episodes.len())..range.end.min(self.episodes.len())];
        slice.iter().map(|e| e.cumulative_reward).sum::<f64>() / slice.len() as f64
    }

    /// Mean of the finite per-episode losses in `range`; NaN if there are none.
    pub fn mean_loss(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.episodes[range.start.min(self.episodes.len())..range.end.min(self.episodes.len())];
        let finite: Vec<f64> = slice.iter().map(|e| e.mean_loss).filter(|l| l.is_finite()).collect();
        finite.iter().sum::<f64>() / finite.len() as f64
    }

    /// Mean cumulative reward over the last `k` episodes.
    pub fn tail_reward(&self, k: usize) -> f64 {
        let n = self.episodes.len();
        self.mean_reward(n.saturating_sub(k)..n)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub metrics: TrainingMetrics,
    pub params: QNetworkParams<T>,
    pub target: QNetworkParams<T>,
}

/// Runs `cfg.n_episodes` episodes of epsilon-greedy DRQN training.
pub fn train<T: Scalar>(
    cfg: &TrainConfig,
    env_cfg: &EnvConfig,
    scenarios: &[ConjunctionScenario],
) -> Result<TrainOutcome<T>, DrqnError> {
    train_with(cfg, env_cfg, scenarios, |_| {})
}

/// [`train`] with a callback after every episode.
///
/// With one scenario every episode replays it; with several, each episode
/// draws one uniformly. Random streams are derived from `cfg.rng_seed`:
/// network initialization, exploration, replay sampling, scenario choice and
/// per-episode observation noise are independent.
pub fn train_with<T: Scalar>(
    cfg: &TrainConfig,
    env_cfg: &EnvConfig,
    scenarios: &[ConjunctionScenario],
    mut on_episode: impl FnMut(&EpisodeMetrics),
) -> Result<TrainOutcome<T>, DrqnError> {
    cfg.validate()?;
    env_cfg.validate()?;
    if scenarios.is_empty() {
        return Err(DrqnError::Config("training needs at least one scenario".into()));
    }
    let started = Instant::now();
    let seed = cfg.rng_seed;
    let shape = NetworkShape::new(env_cfg.feature_dim(), cfg.hidden_size, N_ACTIONS)?;
    let online = QNetworkParams::<T>::init(shape, &mut rng_from(derive_seed(seed, &[0])));
    let mut target = online.clone();
    let mut opt = OptimizerState::new(&online);
    let mut agent =
        GreedyAgent::new(online, env_cfg.debris_slots).with_exploration(cfg.epsilon_start, derive_seed(seed, &[1]));
    let mut replay_rng = rng_from(derive_seed(seed, &[2]));
    let mut scenario_rng = rng_from(derive_seed(seed, &[4]));
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let step_cfg = StepConfig::from(cfg);
    let mut envs: Vec<Option<CollisionAvoidanceEnv>> = vec![None; scenarios.len()];
    let mut metrics = TrainingMetrics::default();

    for episode in 0..cfg.n_episodes {
        let pick = if scenarios.len() == 1 {
            0
        } else {
            scenario_rng.random_range(0..scenarios.len())
        };
        let env = match &mut envs[pick] {
            Some(env) => env,
            slot => slot.insert(CollisionAvoidanceEnv::new(scenarios[pick].clone(), env_cfg.clone())?),
        };
        let epsilon = cfg.epsilon(episode);
        agent.set_epsilon(epsilon);
        agent.reset_state();
        let mut features = env
            .reset(derive_seed(seed, &[3, episode as u64]))?
            .features(env_cfg.debris_slots)?;
        let mut transitions = Vec::with_capacity(env.horizon());
        let mut total_reward = 0.0;
        let mut loss_sum = 0.0;
        let mut n_updates = 0usize;
        loop {
            let action = agent.act_on_features(&features)?;
            let out = env.step(action)?;
            let next = out.observation.features(env_cfg.debris_slots)?;
            total_reward += out.reward.total;
            transitions.push(Experience {
                observation: std::mem::replace(&mut features, next.clone()),
                action: action.index(),
                reward: out.reward.total,
                next_observation: next,
                terminal: out.done,
            });
            if buffer.len() >= cfg.batch_size {
                let windows = buffer.sample_sequences(cfg.batch_size, cfg.seq_len, &mut replay_rng)?;
                let (params, target) = (agent.params_mut(), &mut target);
                let loss = train_step(&windows, params, target, &mut opt, &step_cfg)?;
                loss_sum += loss.to_f64_lossless();
                n_updates += 1;
            }
            if out.done {
                break;
            }
        }
        buffer.store_episode(transitions);
        let m = EpisodeMetrics {
            episode,
            cumulative_reward: total_reward,
            mean_loss: if n_updates > 0 {
                loss_sum / n_updates as f64
            } else {
                f64::NAN
            },
            epsilon,
        };
        on_episode(&m);
        metrics.episodes.push(m);
    }
    metrics.wall_clock_secs = started.elapsed().as_secs_f64();
    let params = agent.params().clone();
    Ok(TrainOutcome {
        metrics,
        params,
        target,
    })
}
