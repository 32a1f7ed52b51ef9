use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::EnvState;
use super::EnvError;
use crate::scalar::Scalar;
use crate::Vector3;

/// Positions are divided by this before entering the network, m.
pub const POSITION_SCALE: f64 = 1.0e7;
/// Velocities are divided by this before entering the network, m/s.
pub const VELOCITY_SCALE: f64 = 1.0e4;

/// Noisy view of the environment: the agent's only input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub protected_pos: Vector3,
    pub protected_vel: Vector3,
    pub debris_pos: Vec<Vector3>,
    pub debris_vel: Vec<Vector3>,
    pub fuel_fraction: f64,
    pub time_fraction: f64,
}

/// Network input width for `debris_slots` debris.
pub const fn feature_dim(debris_slots: usize) -> usize {
    6 + 6 * debris_slots + 2
}

impl Observation {
    /// Normalized feature vector, debris padded with zeros up to `debris_slots`.
    pub fn features(&self, debris_slots: usize) -> Result<Vec<f64>, EnvError> {
        if self.debris_pos.len() > debris_slots {
            return Err(EnvError::Config(format!(
                "{} debris do not fit in {debris_slots} observation slots",
                self.debris_pos.len()
            )));
        }
        let mut out = Vec::with_capacity(feature_dim(debris_slots));
        let mut push = |p: &Vector3, v: &Vector3| {
            out.extend(p.0.iter().map(|c| c / POSITION_SCALE));
            out.extend(v.0.iter().map(|c| c / VELOCITY_SCALE));
        };
        push(&self.protected_pos, &self.protected_vel);
        for (p, v) in self.debris_pos.iter().zip(&self.debris_vel) {
            push(p, v);
        }
        out.resize(6 + 6 * debris_slots, 0.0);
        out.push(self.fuel_fraction);
        out.push(self.time_fraction);
        Ok(out)
    }

    /// Features converted to the network scalar type.
    pub fn features_as<T: Scalar>(&self, debris_slots: usize) -> Result<Vec<T>, EnvError> {
        Ok(self.features(debris_slots)?.into_iter().map(T::lit).collect())
    }
}

fn noisy<R: Rng + ?Sized>(v: Vector3, sigma: f64, rng: &mut R) -> Vector3 {
    let noise = Vector3::new(
        f64::standard_normal(rng),
        f64::standard_normal(rng),
        f64::standard_normal(rng),
    );
    v + noise * sigma
}

/// Adds independent Gaussian noise to every position and velocity component.
/// Fuel and time fractions are exact.
pub fn observe<R: Rng + ?Sized>(
    state: &EnvState,
    sigma_obs_pos: f64,
    sigma_obs_vel: f64,
    rng: &mut R,
) -> Result<Observation, EnvError> {
    let protected = state.protected_state()?;
    let debris = state.debris_states()?;
    let protected_pos = noisy(protected.position, sigma_obs_pos, rng);
    let protected_vel = noisy(protected.velocity, sigma_obs_vel, rng);
    let mut debris_pos = Vec::with_capacity(debris.len());
    let mut debris_vel = Vec::with_capacity(debris.len());
    for d in &debris {
        debris_pos.push(noisy(d.position, sigma_obs_pos, rng));
        debris_vel.push(noisy(d.velocity, sigma_obs_vel, rng));
    }
    Ok(Observation {
        protected_pos,
        protected_vel,
        debris_pos,
        debris_vel,
        fuel_fraction: state.fuel_fraction(),
        time_fraction: state.time_fraction(),
    })
}
