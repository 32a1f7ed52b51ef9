//! Retrograde conjunction reconstruction.
//!
//! A debris object is created by picking a collision instant, projecting the
//! protected spacecraft to it, perturbing the position and velocity there, and
//! rewinding the resulting orbit to the scenario start.

mod sampling;
mod scenario;

use thiserror::Error;

use crate::orbit::OrbitError;

pub use sampling::{
    apply_velocity_noise, place_debris_position, rotate_velocity, sample_collision_time, sample_theta, AngleRange,
};
pub use scenario::{
    default_protected_elements, default_theta_ranges, generate_scenario, reconstruct_debris, ConjunctionScenario,
    DebrisRecord, ScenarioConfig, ScenarioDistribution, MAX_RECONSTRUCTION_RETRIES,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConjunctionError {
    #[error("{0}")]
    Domain(String),
    #[error("invalid scenario configuration: {0}")]
    InvalidConfig(String),
    #[error("position and velocity are collinear")]
    DegenerateGeometry,
    /// The drawn collision state does not give a bound orbit; draw again.
    #[error("reconstruction rejected: {0}")]
    Resample(OrbitError),
    #[error("debris {index}: no bound orbit after {attempts} attempts")]
    GenerationFailed { index: usize, attempts: usize },
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error("scenario format: {0}")]
    Format(String),
    #[error("scenario io: {0}")]
    Io(String),
}
