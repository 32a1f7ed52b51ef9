use serde::{Deserialize, Serialize};

use crate::scalar::wrap_pi;
use crate::Elements;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    /// Collision-probability threshold; penalties apply strictly above it.
    pub collision_threshold: f64,
    /// Fuel level (fuel units) below which burning costs an extra `w_low_fuel`.
    pub fuel_threshold: f64,
    /// Allowed deviation of (a [m], e, i, W, w) from the reference orbit.
    pub deviation_thresholds: [f64; 5],
    pub w_collision: f64,
    pub w_fuel: f64,
    pub w_deviation: f64,
    pub w_low_fuel: f64,
    /// Extra penalty on the step where a collision occurs.
    pub w_terminal: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            collision_threshold: 1e-4,
            fuel_threshold: 10.0,
            deviation_thresholds: [100.0, 0.01, 0.01, 0.01, 0.01],
            w_collision: 100.0,
            w_fuel: 1.0,
            w_deviation: 1.0,
            w_low_fuel: 5.0,
            w_terminal: 1000.0,
        }
    }
}

/// Reward split by source. Every component is `<= 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub collision_penalty: f64,
    pub fuel_penalty: f64,
    pub deviation_penalty: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn new(collision_penalty: f64, fuel_penalty: f64, deviation_penalty: f64) -> Self {
        Self {
            collision_penalty,
            fuel_penalty,
            deviation_penalty,
            total: collision_penalty + fuel_penalty + deviation_penalty,
        }
    }
}

/// Absolute deviations of (a, e, i, W, w) from the reference; angles wrapped.
pub fn element_deviations(current: &Elements, reference: &Elements) -> [f64; 5] {
    [
        (current.a - reference.a).abs(),
        (current.e - reference.e).abs(),
        (current.i - reference.i).abs(),
        wrap_pi(current.raan - reference.raan).abs(),
        wrap_pi(current.arg_periapsis - reference.arg_periapsis).abs(),
    ]
}

/// Inputs of the reward that depend on the environment state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardTerms {
    /// Largest collision probability over all debris.
    pub max_probability: f64,
    pub deviations: [f64; 5],
    /// Fuel consumed by this step's burn, fuel units.
    pub fuel_used: f64,
    /// Fuel left after the burn, fuel units.
    pub fuel_remaining: f64,
    pub fuel_capacity: f64,
}

pub fn collision_penalty(p: f64, cfg: &RewardConfig) -> f64 {
    if p > cfg.collision_threshold {
        -cfg.w_collision * (1.0 + (p / cfg.collision_threshold).log10())
    } else {
        0.0
    }
}

/// Fuel term; inactive when nothing was burned.
pub fn fuel_penalty(fuel_used: f64, fuel_remaining: f64, fuel_capacity: f64, cfg: &RewardConfig) -> f64 {
    if fuel_used <= 0.0 {
        return 0.0;
    }
    let mut penalty = -cfg.w_fuel * fuel_used / fuel_capacity;
    if fuel_remaining < cfg.fuel_threshold {
        penalty -= cfg.w_low_fuel;
    }
    penalty
}

pub fn deviation_penalty(deviations: &[f64; 5], cfg: &RewardConfig) -> f64 {
    let excess: f64 = deviations
        .iter()
        .zip(&cfg.deviation_thresholds)
        .map(|(&dev, &thresh)| (dev - thresh).max(0.0) / thresh)
        .sum();
    if excess > 0.0 {
        -cfg.w_deviation * excess
    } else {
        0.0
    }
}

pub fn reward_from_terms(terms: &RewardTerms, cfg: &RewardConfig) -> RewardBreakdown {
    RewardBreakdown::new(
        collision_penalty(terms.max_probability, cfg),
        fuel_penalty(terms.fuel_used, terms.fuel_remaining, terms.fuel_capacity, cfg),
        deviation_penalty(&terms.deviations, cfg),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> RewardTerms {
        RewardTerms {
            max_probability: 1e-4,
            deviations: [100.0, 0.01, 0.01, 0.01, 0.01],
            fuel_used: 0.0,
            fuel_remaining: 5.0,
            fuel_capacity: 20.0,
        }
    }

    #[test]
    fn inactive_at_thresholds() {
        let r = reward_from_terms(&quiet(), &RewardConfig::default());
        assert_eq!(r, RewardBreakdown::new(0.0, 0.0, 0.0));
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn collision_penalty_value() {
        let cfg = RewardConfig::default();
        assert!((collision_penalty(1e-3, &cfg) + 200.0).abs() < 1e-12);
        assert!(collision_penalty(1.0000001e-4, &cfg) < 0.0);
    }

    #[test]
    fn each_component_activates_independently() {
        let cfg = RewardConfig::default();
        let mut t = quiet();
        t.max_probability = 2e-4;
        let r = reward_from_terms(&t, &cfg);
        assert!(r.collision_penalty < 0.0 && r.fuel_penalty == 0.0 && r.deviation_penalty == 0.0);

        for k in 0..5 {
            let mut t = quiet();
            t.deviations[k] *= 1.5;
            let r = reward_from_terms(&t, &cfg);
            assert!((r.deviation_penalty + 0.5).abs() < 1e-12, "element {k}");
            assert_eq!(r.collision_penalty, 0.0);
            assert_eq!(r.fuel_penalty, 0.0);
        }

        let mut t = quiet();
        t.fuel_used = 0.2;
        t.fuel_remaining = 15.0;
        let r = reward_from_terms(&t, &cfg);
        assert!((r.fuel_penalty + 0.01).abs() < 1e-15);
        t.fuel_remaining = 9.9;
        let r = reward_from_terms(&t, &cfg);
        assert!((r.fuel_penalty + 5.01).abs() < 1e-12);
        assert_eq!(r.total, r.fuel_penalty);
    }

    #[test]
    fn wrapped_angle_deviation() {
        use std::f64::consts::TAU;
        let reference = Elements::new(7e6, 0.01, 0.9, TAU - 0.003, 0.001, 0.0).unwrap();
        let current = Elements::new(7e6, 0.01, 0.9, 0.002, TAU - 0.001, 0.0).unwrap();
        let d = element_deviations(&current, &reference);
        assert!(d[3] < 0.01 && d[4] < 0.01, "{d:?}");
    }
}
