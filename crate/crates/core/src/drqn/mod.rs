//! Deep recurrent Q-learning: replay of whole episodes, epsilon-greedy
//! exploration, a softly updated target network, and evaluation against a
//! threshold-triggered baseline.

mod config;
mod learner;
mod policy;
mod replay;
mod train;

use thiserror::Error;

use crate::env::EnvError;
use crate::neural::NeuralError;

pub use config::TrainConfig;
pub use learner::{select_action, soft_update, td_step_targets, td_targets, train_step, window_batch, StepConfig};
pub use policy::{
    evaluate, held_out_seeds, EvalMetrics, GreedyAgent, Policy, ThresholdBaseline, ZeroPolicy, BASELINE_BURN,
};
pub use replay::{Experience, ReplayBuffer};
pub use train::{train, train_with, EpisodeMetrics, TrainOutcome, TrainingMetrics};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DrqnError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("replay buffer is empty")]
    NotReady,
    #[error("training diverged at update {update}: loss {loss}")]
    Divergence { update: u64, loss: f64 },
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Env(#[from] EnvError),
}
