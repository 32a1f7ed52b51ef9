use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::orbit::{state_to_elements, Orbit};
use crate::{Elements, Grav, State, Vector3};

/// Burn scheduled inside the current step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledImpulse {
    /// Absolute burn time, s.
    pub time: f64,
    /// Applied Δv, m/s.
    pub dv: Vector3,
}

/// Ground truth of the environment.
///
/// Fuel is tracked in hundredths of a fuel unit so the ledger is exact: every
/// thrust level is a whole number of hundredths.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub protected: Orbit<f64>,
    pub debris: Vec<Orbit<f64>>,
    /// Current absolute time, s.
    pub time: f64,
    pub start_time: f64,
    pub end_time: f64,
    pub(crate) fuel_remaining_centi: i64,
    pub(crate) fuel_capacity_centi: i64,
    /// Protected orbit at episode start.
    pub reference_elements: Elements,
    pub step_index: usize,
    pub pending_impulse: Option<ScheduledImpulse>,
    pub grav: Grav,
}

pub(crate) fn to_centi(fuel_units: f64) -> Result<i64, EnvError> {
    let centi = (fuel_units * 100.0).round();
    if !(centi >= 0.0) || (centi - fuel_units * 100.0).abs() > 1e-6 || centi > 1e15 {
        return Err(EnvError::Config(format!(
            "fuel amount {fuel_units} is not a non-negative multiple of 0.01"
        )));
    }
    Ok(centi as i64)
}

impl EnvState {
    pub fn protected_state(&self) -> Result<State, EnvError> {
        Ok(self.protected.state_at(self.time, &self.grav)?)
    }

    pub fn debris_states(&self) -> Result<Vec<State>, EnvError> {
        self.debris
            .iter()
            .map(|o| o.state_at(self.time, &self.grav).map_err(EnvError::from))
            .collect()
    }

    /// Osculating elements of the protected object now.
    pub fn protected_elements(&self) -> Result<Elements, EnvError> {
        Ok(state_to_elements(&self.protected_state()?, &self.grav)?)
    }

    pub fn fuel_remaining(&self) -> f64 {
        self.fuel_remaining_centi as f64 / 100.0
    }

    pub fn fuel_capacity(&self) -> f64 {
        self.fuel_capacity_centi as f64 / 100.0
    }

    /// Fuel consumed so far, exact.
    pub fn fuel_used(&self) -> f64 {
        (self.fuel_capacity_centi - self.fuel_remaining_centi) as f64 / 100.0
    }

    pub fn fuel_fraction(&self) -> f64 {
        self.fuel_remaining_centi as f64 / self.fuel_capacity_centi as f64
    }

    pub fn time_fraction(&self) -> f64 {
        ((self.time - self.start_time) / (self.end_time - self.start_time)).clamp(0.0, 1.0)
    }
}
