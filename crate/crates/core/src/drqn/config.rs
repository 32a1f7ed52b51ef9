use serde::{Deserialize, Serialize};

use super::DrqnError;
use crate::neural::{AdamConfig, DEFAULT_HUBER_DELTA};

/// Learner hyperparameters. Defaults are the single-environment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub n_episodes: usize,
    /// Replay capacity in transitions.
    pub buffer_capacity: usize,
    pub tau: f64,
    pub n_environments: usize,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Episodes over which epsilon decays linearly; half of `n_episodes` when unset.
    pub epsilon_decay_episodes: Option<usize>,
    /// Longest replayed history window.
    pub seq_len: usize,
    pub rng_seed: u64,
    pub huber_delta: f64,
    /// Multiplier applied to rewards inside TD targets. Reported rewards are unscaled.
    pub reward_scale: f64,
    /// Regress every transition of a replay window instead of only its last one.
    pub loss_on_all_steps: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 50,
            hidden_size: 128,
            learning_rate: 1e-4,
            n_episodes: 200,
            buffer_capacity: 1000,
            tau: 0.1,
            n_environments: 1,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: None,
            seq_len: 16,
            rng_seed: 0,
            huber_delta: DEFAULT_HUBER_DELTA,
            reward_scale: 0.01,
            loss_on_all_steps: false,
        }
    }
}

impl TrainConfig {
    /// Settings for training across many pre-generated scenarios.
    pub fn multi_environment() -> Self {
        Self {
            batch_size: 100,
            n_environments: 200,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DrqnError> {
        let fail = |msg: String| Err(DrqnError::Config(msg));
        if self.batch_size == 0 || self.hidden_size == 0 || self.seq_len == 0 {
            return fail("batch_size, hidden_size and seq_len must be at least 1".into());
        }
        if self.buffer_capacity == 0 || self.n_environments == 0 {
            return fail("buffer_capacity and n_environments must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        for (name, v) in [
            ("tau", self.tau),
            ("gamma", self.gamma),
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.huber_delta > 0.0) {
            return fail(format!("huber_delta must be positive, got {}", self.huber_delta));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return fail(format!("reward_scale must be positive, got {}", self.reward_scale));
        }
        Ok(())
    }

    pub fn decay_episodes(&self) -> usize {
        self.epsilon_decay_episodes
            .unwrap_or_else(|| self.n_episodes.div_ceil(2))
    }

    /// Exploration rate used throughout episode `episode` (0-based).
    pub fn epsilon(&self, episode: usize) -> f64 {
        let decay = self.decay_episodes();
        if decay == 0 || episode >= decay {
            return self.epsilon_end;
        }
        let frac = episode as f64 / decay as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_learning_rate(self.learning_rate)
    }
}
