use serde::{Deserialize, Serialize};

use super::elements::{elements_to_state, GravParams, KeplerianElements, StateVector};
use super::OrbitError;
use crate::scalar::Scalar;

/// Maps osculating elements at their epoch plus an elapsed time to a state.
///
/// Same contract shape as an SGP4-style propagator, so a perturbed model can be
/// dropped in without touching callers.
pub trait Propagator<T: Scalar> {
    /// State `dt` seconds after the elements' epoch. The returned `epoch` is `dt`.
    fn propagate(&self, elements: &KeplerianElements<T>, dt: T) -> Result<StateVector<T>, OrbitError>;
}

/// Unperturbed two-body propagation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoBody<T> {
    pub grav: GravParams<T>,
}

impl<T: Scalar> TwoBody<T> {
    pub fn new(grav: GravParams<T>) -> Self {
        Self { grav }
    }
}

impl<T: Scalar> Propagator<T> for TwoBody<T> {
    fn propagate(&self, elements: &KeplerianElements<T>, dt: T) -> Result<StateVector<T>, OrbitError> {
        propagate(elements, dt, &self.grav)
    }
}

/// Two-body propagation: advances the mean anomaly by `n * dt`.
pub fn propagate<T: Scalar>(
    elements: &KeplerianElements<T>,
    dt: T,
    grav: &GravParams<T>,
) -> Result<StateVector<T>, OrbitError> {
    if !dt.is_finite() {
        return Err(OrbitError::Domain("propagation interval is not finite".into()));
    }
    let mut state = elements_to_state(&elements.advanced(dt, grav), grav)?;
    state.epoch = dt;
    Ok(state)
}

/// Elements anchored at an absolute epoch (s since scenario start).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orbit<T> {
    pub elements: KeplerianElements<T>,
    pub epoch: T,
}

impl<T: Scalar> Orbit<T> {
    pub fn new(elements: KeplerianElements<T>, epoch: T) -> Self {
        Self { elements, epoch }
    }

    /// State at absolute time `t`, stamped with `epoch = t`.
    pub fn state_at(&self, t: T, grav: &GravParams<T>) -> Result<StateVector<T>, OrbitError> {
        let mut state = propagate(&self.elements, t - self.epoch, grav)?;
        state.epoch = t;
        Ok(state)
    }

    /// Same orbit re-anchored at `t`.
    pub fn rebased(&self, t: T, grav: &GravParams<T>) -> Self {
        Self {
            elements: self.elements.advanced(t - self.epoch, grav),
            epoch: t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::Vec3;

    fn earth() -> GravParams<f64> {
        GravParams::earth()
    }

    #[test]
    fn zero_interval_matches_conversion() {
        let kep = KeplerianElements::new(7.2e6, 0.05, 0.9, 1.0, 0.5, 2.0).unwrap();
        let a = propagate(&kep, 0.0, &earth()).unwrap();
        let b = elements_to_state(&kep, &earth()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_period_returns_to_start() {
        let kep = KeplerianElements::new(7.2e6, 0.2, 0.9, 1.0, 0.5, 2.0).unwrap();
        let period = kep.period(&earth());
        let a = propagate(&kep, 0.0, &earth()).unwrap();
        let b = propagate(&kep, period, &earth()).unwrap();
        assert!((a.position - b.position).norm() <= 1e-6 * a.position.norm());
        assert!((a.velocity - b.velocity).norm() <= 1e-6 * a.velocity.norm());
    }

    #[test]
    fn half_period_circular_is_antipodal() {
        let kep = KeplerianElements::new(7.0e6, 0.0, 0.4, 0.3, 0.0, 1.0).unwrap();
        let half = kep.period(&earth()) / 2.0;
        let a = propagate(&kep, 0.0, &earth()).unwrap();
        let b = propagate(&kep, half, &earth()).unwrap();
        assert!((a.position + b.position).norm() <= 1e-6 * a.position.norm());
    }

    #[test]
    fn negative_interval_rewinds() {
        let kep = KeplerianElements::new(7.0e6, 0.1, 0.4, 0.3, 0.2, 1.0).unwrap();
        let forward = kep.advanced(1234.5, &earth());
        let back = propagate(&forward, -1234.5, &earth()).unwrap();
        let start = propagate(&kep, 0.0, &earth()).unwrap();
        assert!((back.position - start.position).norm() < 1e-5);
    }

    #[test]
    fn orbit_state_epochs_are_absolute() {
        let kep = KeplerianElements::new(7.0e6, 0.1, 0.4, 0.3, 0.2, 1.0).unwrap();
        let orbit = Orbit::new(kep, 100.0);
        let s = orbit.state_at(400.0, &earth()).unwrap();
        assert_eq!(s.epoch, 400.0);
        let direct = propagate(&kep, 300.0, &earth()).unwrap();
        assert_eq!(s.position, direct.position);
        let rebased = orbit.rebased(250.0, &earth());
        let s2 = rebased.state_at(400.0, &earth()).unwrap();
        assert!((s2.position - s.position).norm() < 1e-6);
        let _ = Vec3::<f64>::zero();
    }
}
