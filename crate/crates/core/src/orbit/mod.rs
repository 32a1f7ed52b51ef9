//! Two-body orbital mechanics: Kepler's equation, element/state conversion and
//! propagation.
//!
//! Everything here is a pure function of its inputs and generic over [`Scalar`](crate::Scalar).

mod elements;
mod kepler;
mod propagator;
mod vec3;

use thiserror::Error;

pub use elements::{
    elements_to_state, state_to_elements, true_anomaly, GravParams, KeplerianElements, StateVector, EARTH_MU,
};
pub use kepler::{default_tolerance, eccentric_to_true, solve_kepler, true_to_eccentric, MAX_NEWTON_ITERATIONS};
pub use propagator::{propagate, Orbit, Propagator, TwoBody};
pub use vec3::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("eccentricity {0} outside [0, 1)")]
    EccentricityOutOfRange(f64),
    #[error("state describes an unbound orbit (e = {0})")]
    Hyperbolic(f64),
    #[error("degenerate orbit: angular momentum vanishes")]
    DegenerateOrbit,
    #[error("{0}")]
    Domain(String),
}
