//! Hand-written recurrent Q-network: one LSTM layer followed by a dense head
//! with one output per action, trained by backpropagation through time.

mod adam;
mod checkpoint;
mod gradcheck;
mod loss;
mod lstm;
mod params;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use checkpoint::{load_params, read_params, save_params, write_params, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{gradient_check, GradCheck, GRADCHECK_FLOOR};
pub use loss::{huber_grad, huber_loss, DEFAULT_HUBER_DELTA};
pub use lstm::{
    backward, backward_batch, backward_steps, forward_batch, loss_and_gradients, q_all_steps, q_forward, q_values,
    recurrent_step, ForwardCache, RecurrentState, SequenceBatch, StepTarget,
};
pub use params::{NetworkShape, QNetworkParams};


#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{0}")]
    Domain(String),
    #[error("checkpoint byte {offset}: {message}")]
    Checkpoint { offset: usize, message: String },
    #[error("checkpoint io: {0}")]
    Io(String),
}
