//! Partially observable collision-avoidance environment.
//!
//! Ground truth is two-body motion of the protected spacecraft and its debris.
//! Each step the agent picks one of 625 impulsive burns (three Δv axes plus the
//! burn instant inside the step), both objects are propagated, and the agent
//! receives a Gaussian-noised observation together with a penalty built from
//! collision risk, fuel use and drift away from the reference orbit.

mod action;
mod observation;
mod reward;
mod risk;
mod state;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conjunction::ConjunctionScenario;
use crate::orbit::{state_to_elements, Orbit, OrbitError};
use crate::seed::{rng_from, Rng};
use crate::Vector3;

pub use action::{decode_action, Action, ActionDigits, LEVELS, N_ACTIONS, THRUST_VALUES};
pub use observation::{feature_dim, observe, Observation, POSITION_SCALE, VELOCITY_SCALE};
pub use reward::{
    collision_penalty, deviation_penalty, element_deviations, fuel_penalty, reward_from_terms, RewardBreakdown,
    RewardConfig, RewardTerms,
};
pub use risk::{collision_probability, find_tca, ClosestApproach};
pub use state::{EnvState, ScheduledImpulse};
pub use trace::{EpisodeTrace, TraceRow};

/// Number of burn instants a step is divided into.
pub const TIME_SLOTS: usize = LEVELS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("action index {0} outside [0, 625)")]
    ActionOutOfRange(usize),
    #[error("environment configuration: {0}")]
    Config(String),
    #[error("step called before reset")]
    NotReset,
    #[error("step called after the episode ended")]
    EpisodeDone,
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error("trace export: {0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    /// Decision interval, s.
    pub dt_step: f64,
    pub sigma_obs_pos: f64,
    pub sigma_obs_vel: f64,
    /// Δv of one thrust unit, m/s.
    pub dv_scale: f64,
    /// Combined position uncertainty of the risk model, m. Defaults to
    /// `sqrt(sigma_obs_pos^2 + sigma_pos^2)` using the scenario's `sigma_pos`.
    pub sigma_c: Option<f64>,
    /// Coarse sampling of the closest-approach search, s.
    pub tca_coarse_dt: f64,
    /// Coarse sampling of the in-step collision check, s.
    pub collision_scan_dt: f64,
    /// Debris slots in the network input.
    pub debris_slots: usize,
    pub reward: RewardConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            dt_step: 100.0,
            sigma_obs_pos: 100.0,
            sigma_obs_vel: 0.1,
            dv_scale: 1.0,
            sigma_c: None,
            tca_coarse_dt: 20.0,
            collision_scan_dt: 10.0,
            debris_slots: 3,
            reward: RewardConfig::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let positive = [
            ("dt_step", self.dt_step),
            ("dv_scale", self.dv_scale),
            ("tca_coarse_dt", self.tca_coarse_dt),
            ("collision_scan_dt", self.collision_scan_dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EnvError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.sigma_obs_pos >= 0.0 && self.sigma_obs_vel >= 0.0) {
            return Err(EnvError::Config("observation noise must be non-negative".into()));
        }
        if let Some(s) = self.sigma_c {
            if !(s >= 0.0) {
                return Err(EnvError::Config(format!("sigma_c must be non-negative, got {s}")));
            }
        }
        if self.debris_slots == 0 {
            return Err(EnvError::Config("debris_slots must be at least 1".into()));
        }
        let r = &self.reward;
        if !(r.collision_threshold > 0.0) || r.deviation_thresholds.iter().any(|t| !(*t > 0.0)) {
            return Err(EnvError::Config("reward thresholds must be positive".into()));
        }
        Ok(())
    }

    /// Risk-model uncertainty for a scenario with placement std `sigma_pos`.
    pub fn sigma_c_for(&self, sigma_pos: f64) -> f64 {
        self.sigma_c
            .unwrap_or_else(|| (self.sigma_obs_pos.powi(2) + sigma_pos.powi(2)).sqrt())
    }

    pub fn feature_dim(&self) -> usize {
        feature_dim(self.debris_slots)
    }
}

/// Diagnostics of one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub collision: bool,
    /// Smallest true separation from any debris during the step, m.
    pub min_distance: f64,
    /// Largest predicted collision probability after the step.
    pub max_probability: f64,
    /// Fuel burned this step, fuel units.
    pub fuel_used: f64,
    /// Absolute time after the step, s.
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub info: StepInfo,
}

/// One environment instance; single-threaded, independent of other instances.
#[derive(Clone, Debug)]
pub struct CollisionAvoidanceEnv {
    scenario: ConjunctionScenario,
    cfg: EnvConfig,
    state: Option<EnvState>,
    rng: Rng,
    done: bool,
    horizon: usize,
    fuel_capacity_centi: i64,
    sigma_c: f64,
}

impl CollisionAvoidanceEnv {
    pub fn new(scenario: ConjunctionScenario, cfg: EnvConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        scenario
            .config
            .validate()
            .map_err(|e| EnvError::Config(e.to_string()))?;
        if scenario.debris.len() > cfg.debris_slots {
            return Err(EnvError::Config(format!(
                "scenario has {} debris but only {} observation slots",
                scenario.debris.len(),
                cfg.debris_slots
            )));
        }
        let fuel_capacity_centi = state::to_centi(scenario.config.fuel_capacity)?;
        if fuel_capacity_centi == 0 {
            return Err(EnvError::Config("fuel_capacity must be positive".into()));
        }
        let span = scenario.config.span();
        let horizon = ((span / cfg.dt_step) - 1e-9).ceil().max(1.0) as usize;
        let sigma_c = cfg.sigma_c_for(scenario.config.sigma_pos);
        Ok(Self {
            scenario,
            cfg,
            state: None,
            rng: rng_from(0),
            done: false,
            horizon,
            fuel_capacity_centi,
            sigma_c,
        })
    }

    pub fn scenario(&self) -> &ConjunctionScenario {
        &self.scenario
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    /// Number of steps in a full episode.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn sigma_c(&self) -> f64 {
        self.sigma_c
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Starts an episode at `start_time` with full fuel. `seed` drives the
    /// observation noise for the whole episode.
    pub fn reset(&mut self, seed: u64) -> Result<Observation, EnvError> {
        let sc = &self.scenario.config;
        let state = EnvState {
            protected: sc.protected_orbit(),
            debris: self.scenario.debris_orbits().collect(),
            time: sc.start_time,
            start_time: sc.start_time,
            end_time: sc.end_time,
            fuel_remaining_centi: self.fuel_capacity_centi,
            fuel_capacity_centi: self.fuel_capacity_centi,
            reference_elements: sc.protected_elements,
            step_index: 0,
            pending_impulse: None,
            grav: sc.mu,
        };
        self.rng = rng_from(seed);
        self.done = false;
        let obs = observe(&state, self.cfg.sigma_obs_pos, self.cfg.sigma_obs_vel, &mut self.rng)?;
        self.state = Some(state);
        Ok(obs)
    }

    /// Reward of `state` after a burn that used `fuel_used` fuel units.
    pub fn compute_reward(&self, state: &EnvState, fuel_used: f64) -> Result<(RewardBreakdown, f64), EnvError> {
        let max_probability = self.max_collision_probability(state)?;
        let deviations = element_deviations(&state.protected.elements, &state.reference_elements);
        let terms = RewardTerms {
            max_probability,
            deviations,
            fuel_used,
            fuel_remaining: state.fuel_remaining(),
            fuel_capacity: state.fuel_capacity(),
        };
        Ok((reward_from_terms(&terms, &self.cfg.reward), max_probability))
    }

    /// Largest collision probability over all debris at their closest approach
    /// within the rest of the episode.
    pub fn max_collision_probability(&self, state: &EnvState) -> Result<f64, EnvError> {
        let horizon = (state.end_time - state.time).max(0.0);
        let radius = self.scenario.config.combined_radius();
        let mut max_p: f64 = 0.0;
        for debris in &state.debris {
            let tca = find_tca(
                &state.protected,
                debris,
                state.time,
                horizon,
                self.cfg.tca_coarse_dt,
                &state.grav,
            )?;
            max_p = max_p.max(collision_probability(tca.d_star, radius, self.sigma_c));
        }
        Ok(max_p)
    }

    fn segment_min_distance(
        &self,
        protected: &Orbit<f64>,
        state: &EnvState,
        from: f64,
        to: f64,
    ) -> Result<f64, EnvError> {
        let mut min_d = f64::INFINITY;
        for debris in &state.debris {
            let tca = find_tca(
                protected,
                debris,
                from,
                (to - from).max(0.0),
                self.cfg.collision_scan_dt,
                &state.grav,
            )?;
            min_d = min_d.min(tca.d_star);
        }
        Ok(min_d)
    }

    /// Applies `action` and advances one decision interval.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let mut state = self.state.clone().ok_or(EnvError::NotReset)?;
        let t0 = state.time;
        let step_dt = self.cfg.dt_step.min(state.end_time - t0);
        let t1 = if state.step_index + 1 >= self.horizon {
            state.end_time
        } else {
            t0 + step_dt
        };
        let (dv_units, slot) = action.decode();
        let burn_time = t0 + (t1 - t0) * slot as f64 / TIME_SLOTS as f64;

        let requested = action.fuel_cost_centi();
        let used = requested.min(state.fuel_remaining_centi);
        let mut dv = dv_units * self.cfg.dv_scale;
        if used < requested {
            dv = dv * (used as f64 / requested as f64);
        }

        let mut min_distance = self.segment_min_distance(&state.protected, &state, t0, burn_time)?;
        if used > 0 {
            let mut burn_state = state.protected.state_at(burn_time, &state.grav)?;
            burn_state.velocity += dv;
            let elements = state_to_elements(&burn_state, &state.grav)?;
            state.protected = Orbit::new(elements, burn_time);
            state.pending_impulse = Some(ScheduledImpulse { time: burn_time, dv });
        } else {
            state.pending_impulse = None;
        }
        min_distance = min_distance.min(self.segment_min_distance(&state.protected, &state, burn_time, t1)?);

        state.time = t1;
        state.step_index += 1;
        state.fuel_remaining_centi -= used;
        let fuel_used = used as f64 / 100.0;

        let collision = min_distance < self.scenario.config.combined_radius();
        let (mut reward, max_probability) = self.compute_reward(&state, fuel_used)?;
        if collision {
            reward = RewardBreakdown::new(
                reward.collision_penalty - self.cfg.reward.w_terminal,
                reward.fuel_penalty,
                reward.deviation_penalty,
            );
        }
        let done = collision || state.step_index >= self.horizon || state.fuel_remaining_centi <= 0;
        let observation = observe(&state, self.cfg.sigma_obs_pos, self.cfg.sigma_obs_vel, &mut self.rng)?;
        self.state = Some(state);
        self.done = done;
        Ok(StepOutcome {
            observation,
            reward,
            done,
            info: StepInfo {
                collision,
                min_distance,
                max_probability,
                fuel_used,
                time: t1,
            },
        })
    }
}

/// Velocity change of a single impulse: position and epoch are untouched.
pub fn apply_impulse(state: &crate::State, dv: Vector3) -> crate::State {
    crate::State {
        velocity: state.velocity + dv,
        ..*state
    }
}
