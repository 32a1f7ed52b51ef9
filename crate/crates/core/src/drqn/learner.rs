use ndarray::{Array1, ArrayView1};
use rand::Rng;

use super::config::TrainConfig;
use super::replay::Experience;
use super::DrqnError;
use crate::neural::{
    adam_step, backward_steps, forward_batch, loss_and_gradients, q_all_steps, AdamConfig, OptimizerState,
    QNetworkParams, SequenceBatch, StepTarget,
};
use crate::scalar::Scalar;

/// Epsilon-greedy choice: uniform with probability `epsilon`, otherwise the
/// first index of the largest Q-value.
pub fn select_action<T: Scalar, R: Rng + ?Sized>(q_values: ArrayView1<'_, T>, epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return rng.random_range(0..q_values.len());
    }
    let mut best = 0;
    for (k, &q) in q_values.iter().enumerate().skip(1) {
        if q > q_values[best] {
            best = k;
        }
    }
    best
}

/// `tau * online + (1 - tau) * target`, element-wise.
pub fn soft_update<T: Scalar>(
    online: &QNetworkParams<T>,
    target: &QNetworkParams<T>,
    tau: T,
) -> Result<QNetworkParams<T>, DrqnError> {
    let mut out = target.clone();
    out.blend_from(online, tau)?;
    Ok(out)
}

/// The pieces of [`TrainConfig`] a single update needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepConfig {
    pub gamma: f64,
    pub tau: f64,
    pub huber_delta: f64,
    pub reward_scale: f64,
    pub loss_on_all_steps: bool,
    pub adam: AdamConfig,
}

impl From<&TrainConfig> for StepConfig {
    fn from(cfg: &TrainConfig) -> Self {
        Self {
            gamma: cfg.gamma,
            tau: cfg.tau,
            huber_delta: cfg.huber_delta,
            reward_scale: cfg.reward_scale,
            loss_on_all_steps: cfg.loss_on_all_steps,
            adam: cfg.adam(),
        }
    }
}

fn features<T: Scalar>(x: &[f64]) -> Vec<T> {
    x.iter().map(|&v| T::lit(v)).collect()
}

/// Packs the observation histories (or, with `next`, the following-observation
/// histories) of replay windows for batched unrolling.
pub fn window_batch<T: Scalar>(windows: &[&[Experience]], next: bool) -> Result<SequenceBatch<T>, DrqnError> {
    let seqs: Vec<Vec<Vec<T>>> = windows
        .iter()
        .map(|w| {
            w.iter()
                .map(|e| features(if next { &e.next_observation } else { &e.observation }))
                .collect()
        })
        .collect();
    let views: Vec<&[Vec<T>]> = seqs.iter().map(|s| s.as_slice()).collect();
    let obs_dim = seqs
        .first()
        .and_then(|s| s.first())
        .map(|x| x.len())
        .ok_or(DrqnError::NotReady)?;
    Ok(SequenceBatch::new(obs_dim, &views)?)
}

/// `y = s r` for terminal transitions, `y = s r + gamma max_a Q_target(next history, a)`
/// otherwise, for the last transition of every window; `s` is `reward_scale`.
pub fn td_targets<T: Scalar>(
    windows: &[&[Experience]],
    target: &QNetworkParams<T>,
    gamma: f64,
    reward_scale: f64,
) -> Result<Vec<T>, DrqnError> {
    if windows.is_empty() {
        return Err(DrqnError::NotReady);
    }
    let needs_bootstrap = windows.iter().any(|w| !w.last().expect("non-empty window").terminal);
    let next_max: Option<Array1<T>> = if needs_bootstrap {
        let batch = window_batch(windows, true)?;
        let (q, _) = forward_batch(target, &batch)?;
        Some(row_maxima(&q))
    } else {
        None
    };
    Ok(windows
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let last = w.last().expect("non-empty window");
            let r = T::lit(last.reward * reward_scale);
            match (&next_max, last.terminal) {
                (Some(m), false) => r + T::lit(gamma) * m[k],
                _ => r,
            }
        })
        .collect())
}

fn row_maxima<T: Scalar>(q: &ndarray::Array2<T>) -> Array1<T> {
    q.rows()
        .into_iter()
        .map(|row| row.iter().copied().fold(T::neg_infinity(), T::max))
        .collect()
}

/// [`td_targets`] for every transition of every window, addressed by unroll
/// step and batch row of the right-aligned [`window_batch`].
pub fn td_step_targets<T: Scalar>(
    windows: &[&[Experience]],
    target: &QNetworkParams<T>,
    gamma: f64,
    reward_scale: f64,
) -> Result<Vec<StepTarget<T>>, DrqnError> {
    let n_steps = windows.iter().map(|w| w.len()).max().ok_or(DrqnError::NotReady)?;
    let next_max: Option<Vec<Array1<T>>> = if windows.iter().flat_map(|w| w.iter()).any(|e| !e.terminal) {
        let (_, cache) = forward_batch(target, &window_batch(windows, true)?)?;
        Some(q_all_steps(target, &cache).iter().map(row_maxima).collect())
    } else {
        None
    };
    let mut out = Vec::with_capacity(windows.iter().map(|w| w.len()).sum());
    for (row, w) in windows.iter().enumerate() {
        let offset = n_steps - w.len();
        for (k, e) in w.iter().enumerate() {
            let step = offset + k;
            let r = T::lit(e.reward * reward_scale);
            let y = match (&next_max, e.terminal) {
                (Some(m), false) => r + T::lit(gamma) * m[step][row],
                _ => r,
            };
            out.push(StepTarget {
                step,
                row,
                action: e.action,
                target: y,
            });
        }
    }
    Ok(out)
}

/// One learning update on a batch of replay windows: Huber TD loss, an Adam
/// step on `online`, then a soft update of `target`. Returns the loss before
/// the update.
pub fn train_step<T: Scalar>(
    windows: &[&[Experience]],
    online: &mut QNetworkParams<T>,
    target: &mut QNetworkParams<T>,
    opt: &mut OptimizerState<T>,
    cfg: &StepConfig,
) -> Result<T, DrqnError> {
    let batch = window_batch::<T>(windows, false)?;
    let delta = T::lit(cfg.huber_delta);
    let (loss, grads) = if cfg.loss_on_all_steps {
        let targets = td_step_targets(windows, target, cfg.gamma, cfg.reward_scale)?;
        let (_, cache) = forward_batch(online, &batch)?;
        backward_steps(online, &cache, &targets, delta)?
    } else {
        let targets = td_targets(windows, target, cfg.gamma, cfg.reward_scale)?;
        let actions: Vec<usize> = windows.iter().map(|w| w.last().expect("non-empty").action).collect();
        loss_and_gradients(online, &batch, &actions, &targets, delta)?
    };
    if !loss.is_finite() {
        return Err(DrqnError::Divergence {
            update: opt.step + 1,
            loss: loss.to_f64_lossless(),
        });
    }
    adam_step(online, &grads, opt, &cfg.adam)?;
    if !online.is_finite() {
        return Err(DrqnError::Divergence {
            update: opt.step,
            loss: f64::NAN,
        });
    }
    target.blend_from(online, T::lit(cfg.tau))?;
    Ok(loss)
}
