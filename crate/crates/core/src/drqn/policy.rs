use serde::{Deserialize, Serialize};

use super::learner::select_action;
use super::DrqnError;
use crate::conjunction::ConjunctionScenario;
use crate::env::{
    collision_probability, find_tca, Action, ActionDigits, CollisionAvoidanceEnv, EnvConfig, Observation,
};
use crate::neural::{q_values, recurrent_step, QNetworkParams, RecurrentState};
use crate::orbit::{state_to_elements, Orbit};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng_from, Rng};
use crate::{Grav, State};

/// Decision rule driven by observations only.
pub trait Policy {
    /// Called after every reset, before the first `act`.
    fn begin_episode(&mut self, env: &CollisionAvoidanceEnv) -> Result<(), DrqnError>;

    fn act(&mut self, observation: &Observation) -> Result<Action, DrqnError>;
}

/// Never burns.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroPolicy;

impl Policy for ZeroPolicy {
    fn begin_episode(&mut self, _env: &CollisionAvoidanceEnv) -> Result<(), DrqnError> {
        Ok(())
    }

    fn act(&mut self, _observation: &Observation) -> Result<Action, DrqnError> {
        Ok(Action::NOOP)
    }
}

/// Recurrent Q-network policy that carries its hidden state across the whole
/// episode. Epsilon-greedy when `epsilon > 0`.
#[derive(Clone, Debug)]
pub struct GreedyAgent<T> {
    params: QNetworkParams<T>,
    debris_slots: usize,
    state: RecurrentState<T>,
    epsilon: f64,
    rng: Rng,
}

impl<T: Scalar> GreedyAgent<T> {
    pub fn new(params: QNetworkParams<T>, debris_slots: usize) -> Self {
        let hidden = params.shape().hidden_size;
        Self {
            params,
            debris_slots,
            state: RecurrentState::zeros(hidden),
            epsilon: 0.0,
            rng: rng_from(0),
        }
    }

    /// Explores with probability `epsilon` using a stream seeded by `seed`.
    pub fn with_exploration(mut self, epsilon: f64, seed: u64) -> Self {
        self.epsilon = epsilon;
        self.rng = rng_from(seed);
        self
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.epsilon = epsilon;
    }

    pub fn params(&self) -> &QNetworkParams<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut QNetworkParams<T> {
        &mut self.params
    }

    pub fn reset_state(&mut self) {
        self.state = RecurrentState::zeros(self.params.shape().hidden_size);
    }

    /// Feeds one observation and returns the action for it.
    pub fn act_on_features(&mut self, features: &[f64]) -> Result<Action, DrqnError> {
        let x: Vec<T> = features.iter().map(|&v| T::lit(v)).collect();
        self.state = recurrent_step(&x, &self.state, &self.params)?;
        let q = q_values(&self.state.hidden, &self.params);
        Ok(Action::new(select_action(q.view(), self.epsilon, &mut self.rng))?)
    }
}

impl<T: Scalar> Policy for GreedyAgent<T> {
    fn begin_episode(&mut self, env: &CollisionAvoidanceEnv) -> Result<(), DrqnError> {
        self.debris_slots = env.config().debris_slots;
        self.reset_state();
        Ok(())
    }

    fn act(&mut self, observation: &Observation) -> Result<Action, DrqnError> {
        let f = observation.features(self.debris_slots)?;
        self.act_on_features(&f)
    }
}

/// Radial-out (+x) burn of 0.1 thrust units at the start of the step.
pub const BASELINE_BURN: ActionDigits = ActionDigits {
    dv: [3, 0, 0],
    time_slot: 0,
};

/// Burns [`BASELINE_BURN`] whenever the collision probability predicted from
/// the observed states exceeds the reward threshold.
#[derive(Clone, Debug, Default)]
pub struct ThresholdBaseline {
    episode: Option<BaselineContext>,
}

#[derive(Clone, Debug)]
struct BaselineContext {
    start_time: f64,
    end_time: f64,
    combined_radius: f64,
    sigma_c: f64,
    threshold: f64,
    coarse_dt: f64,
    grav: Grav,
}

impl ThresholdBaseline {
    pub fn new() -> Self {
        Self::default()
    }

    /// Largest predicted collision probability over the observed debris.
    fn predicted_probability(ctx: &BaselineContext, obs: &Observation) -> f64 {
        let t = ctx.start_time + obs.time_fraction * (ctx.end_time - ctx.start_time);
        let horizon = (ctx.end_time - t).max(0.0);
        let orbit_of = |pos, vel| {
            state_to_elements(&State::new(pos, vel, t), &ctx.grav)
                .ok()
                .map(|el| Orbit::new(el, t))
        };
        let Some(protected) = orbit_of(obs.protected_pos, obs.protected_vel) else {
            return 0.0;
        };
        let mut max_p: f64 = 0.0;
        for (&p, &v) in obs.debris_pos.iter().zip(&obs.debris_vel) {
            // Observations that do not describe a bound orbit carry no usable prediction.
            let Some(debris) = orbit_of(p, v) else { continue };
            if let Ok(tca) = find_tca(&protected, &debris, t, horizon, ctx.coarse_dt, &ctx.grav) {
                max_p = max_p.max(collision_probability(tca.d_star, ctx.combined_radius, ctx.sigma_c));
            }
        }
        max_p
    }

    pub fn decide(&self, obs: &Observation) -> Result<Action, DrqnError> {
        let ctx = self
            .episode
            .as_ref()
            .ok_or_else(|| DrqnError::Config("baseline used before begin_episode".into()))?;
        if Self::predicted_probability(ctx, obs) > ctx.threshold {
            Ok(Action::encode(BASELINE_BURN)?)
        } else {
            Ok(Action::NOOP)
        }
    }

    /// Prepares the baseline for `scenario` under `cfg` without an environment.
    pub fn begin(&mut self, scenario: &ConjunctionScenario, cfg: &EnvConfig) {
        let sc = &scenario.config;
        self.episode = Some(BaselineContext {
            start_time: sc.start_time,
            end_time: sc.end_time,
            combined_radius: sc.combined_radius(),
            sigma_c: cfg.sigma_c_for(sc.sigma_pos),
            threshold: cfg.reward.collision_threshold,
            coarse_dt: cfg.tca_coarse_dt,
            grav: sc.mu,
        });
    }
}

impl Policy for ThresholdBaseline {
    fn begin_episode(&mut self, env: &CollisionAvoidanceEnv) -> Result<(), DrqnError> {
        self.begin(env.scenario(), env.config());
        Ok(())
    }

    fn act(&mut self, observation: &Observation) -> Result<Action, DrqnError> {
        self.decide(observation)
    }
}

/// Aggregates over evaluation rollouts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub n_rollouts: usize,
    pub mean_reward: f64,
    /// Population standard deviation of the cumulative reward.
    pub std_reward: f64,
    pub collision_rate: f64,
    pub mean_fuel_used: f64,
    /// Cumulative reward of every rollout, scenario-major.
    pub rewards: Vec<f64>,
}

/// `n` observation-noise seeds disjoint in derivation path from the training streams.
pub fn held_out_seeds(master: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|k| derive_seed(master, &[0xE7A1, k])).collect()
}

/// Rolls `policy` out once per (scenario, seed) pair.
pub fn evaluate<P: Policy + ?Sized>(
    policy: &mut P,
    scenarios: &[ConjunctionScenario],
    env_cfg: &EnvConfig,
    seeds: &[u64],
) -> Result<EvalMetrics, DrqnError> {
    if scenarios.is_empty() || seeds.is_empty() {
        return Err(DrqnError::Config(
            "evaluation needs at least one scenario and one seed".into(),
        ));
    }
    let mut rewards = Vec::with_capacity(scenarios.len() * seeds.len());
    let mut collisions = 0usize;
    let mut fuel = 0.0;
    for scenario in scenarios {
        let mut env = CollisionAvoidanceEnv::new(scenario.clone(), env_cfg.clone())?;
        for &seed in seeds {
            let mut obs = env.reset(seed)?;
            policy.begin_episode(&env)?;
            let mut total = 0.0;
            loop {
                let action = policy.act(&obs)?;
                let out = env.step(action)?;
                total += out.reward.total;
                if out.info.collision {
                    collisions += 1;
                }
                obs = out.observation;
                if out.done {
                    break;
                }
            }
            fuel += env.state().expect("reset").fuel_used();
            rewards.push(total);
        }
    }
    let n = rewards.len() as f64;
    let mean_reward = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean_reward).powi(2)).sum::<f64>() / n;
    Ok(EvalMetrics {
        n_rollouts: rewards.len(),
        mean_reward,
        std_reward: var.sqrt(),
        collision_rate: collisions as f64 / n,
        mean_fuel_used: fuel / n,
        rewards,
    })
}
