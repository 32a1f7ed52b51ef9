use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{
    apply_velocity_noise, place_debris_position, rotate_velocity, sample_collision_time, sample_theta, AngleRange,
};
use super::ConjunctionError;
use crate::orbit::{propagate, state_to_elements, KeplerianElements, Orbit, OrbitError, StateVector};
use crate::seed::{derive_seed, rng_from};
use crate::{Elements, Grav, State, Vector3};

/// Reconstruction attempts per debris before generation gives up.
pub const MAX_RECONSTRUCTION_RETRIES: usize = 100;

/// Parameters of a single conjunction scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub start_time: f64,
    pub end_time: f64,
    pub n_debris: usize,
    /// Std of the per-axis debris placement around the protected object, m.
    pub sigma_pos: f64,
    /// Std of the multiplicative velocity-magnitude noise.
    pub sigma_vr: f64,
    pub theta_ranges: [AngleRange<f64>; 2],
    pub protected_elements: Elements,
    pub protected_radius: f64,
    pub debris_radius: f64,
    pub fuel_capacity: f64,
    pub mu: Grav,
    pub rng_seed: u64,
}

pub fn default_theta_ranges() -> [AngleRange<f64>; 2] {
    [AngleRange::new(0.01, FRAC_PI_8), AngleRange::new(FRAC_PI_8, FRAC_PI_4)]
}

/// A 7000 km, slightly eccentric, 51.6 degree orbit.
pub fn default_protected_elements() -> Elements {
    KeplerianElements::new(7.0e6, 0.01, 0.9, 1.0, 0.5, 0.0).expect("valid default orbit")
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            start_time: 0.0,
            end_time: 7200.0,
            n_debris: 1,
            sigma_pos: 500.0,
            sigma_vr: 0.05,
            theta_ranges: default_theta_ranges(),
            protected_elements: default_protected_elements(),
            protected_radius: 10.0,
            debris_radius: 5.0,
            fuel_capacity: 20.0,
            mu: Grav::earth(),
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConjunctionError> {
        let fail = |msg: String| Err(ConjunctionError::InvalidConfig(msg));
        if !(self.start_time.is_finite() && self.end_time.is_finite()) || !(self.start_time < self.end_time) {
            return fail(format!(
                "start_time {} must precede end_time {}",
                self.start_time, self.end_time
            ));
        }
        if self.n_debris == 0 {
            return fail("n_debris must be at least 1".into());
        }
        if !(self.sigma_pos >= 0.0) || !(self.sigma_vr >= 0.0) {
            return fail("sigma_pos and sigma_vr must be non-negative".into());
        }
        for r in &self.theta_ranges {
            if !(r.lo > 0.0 && r.lo <= r.hi && r.hi < PI) {
                return fail(format!("theta range [{}, {}] must lie in (0, pi)", r.lo, r.hi));
            }
        }
        if !(self.protected_radius >= 0.0 && self.debris_radius >= 0.0) {
            return fail("radii must be non-negative".into());
        }
        if !(self.fuel_capacity > 0.0 && self.fuel_capacity.is_finite()) {
            return fail("fuel_capacity must be positive".into());
        }
        if !(self.mu.mu_central_body > 0.0) {
            return fail("mu_central_body must be positive".into());
        }
        self.protected_elements
            .normalized()
            .map_err(|e| ConjunctionError::InvalidConfig(format!("protected_elements: {e}")))?;
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.end_time - self.start_time
    }

    pub fn combined_radius(&self) -> f64 {
        self.protected_radius + self.debris_radius
    }

    /// Protected orbit anchored at `start_time`.
    pub fn protected_orbit(&self) -> Orbit<f64> {
        Orbit::new(self.protected_elements, self.start_time)
    }
}

/// One debris object: its elements at `start_time` and its state at the
/// reconstructed collision instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebrisRecord {
    pub elements: Elements,
    pub collision_time: f64,
    pub collision_state: State,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjunctionScenario {
    pub config: ScenarioConfig,
    pub debris: Vec<DebrisRecord>,
}

impl ConjunctionScenario {
    pub fn debris_orbits(&self) -> impl Iterator<Item = Orbit<f64>> + '_ {
        self.debris
            .iter()
            .map(|d| Orbit::new(d.elements, self.config.start_time))
    }

    pub fn to_toml(&self) -> Result<String, ConjunctionError> {
        toml::to_string(self).map_err(|e| ConjunctionError::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, ConjunctionError> {
        let scenario: Self = toml::from_str(text).map_err(|e| ConjunctionError::Format(e.to_string()))?;
        scenario.config.validate()?;
        if scenario.debris.len() != scenario.config.n_debris {
            return Err(ConjunctionError::Format(format!(
                "expected {} debris records, found {}",
                scenario.config.n_debris,
                scenario.debris.len()
            )));
        }
        Ok(scenario)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConjunctionError> {
        std::fs::write(path, self.to_toml()?).map_err(|e| ConjunctionError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, ConjunctionError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConjunctionError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConjunctionError::Format(format!("{}: {e}", path.display())))
    }
}

/// Builds a debris record whose orbit passes through `(collision_pos,
/// collision_vel)` at `collision_time`: the osculating elements at the collision
/// instant with the mean anomaly rewound to `start_time`.
///
/// An unbound reconstruction yields [`ConjunctionError::Resample`].
pub fn reconstruct_debris(
    collision_pos: Vector3,
    collision_vel: Vector3,
    collision_time: f64,
    cfg: &ScenarioConfig,
) -> Result<DebrisRecord, ConjunctionError> {
    let collision_state = StateVector::new(collision_pos, collision_vel, collision_time);
    let at_collision = match state_to_elements(&collision_state, &cfg.mu) {
        Ok(kep) => kep,
        Err(e @ (OrbitError::Hyperbolic(_) | OrbitError::DegenerateOrbit)) => {
            return Err(ConjunctionError::Resample(e))
        }
        Err(e) => return Err(ConjunctionError::Orbit(e)),
    };
    let elements = at_collision.advanced(cfg.start_time - collision_time, &cfg.mu);
    Ok(DebrisRecord {
        elements,
        collision_time,
        collision_state,
    })
}

fn draw_debris<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<DebrisRecord, ConjunctionError> {
    let collision_time = sample_collision_time(cfg.start_time, cfg.end_time, rng)?;
    let projected = propagate(&cfg.protected_elements, collision_time - cfg.start_time, &cfg.mu)?;
    let position = place_debris_position(projected.position, cfg.sigma_pos, rng);
    let theta = sample_theta(&cfg.theta_ranges, rng)?;
    let rotated = rotate_velocity(projected.velocity, projected.position, theta)?;
    let velocity = apply_velocity_noise(rotated, cfg.sigma_vr, rng);
    reconstruct_debris(position, velocity, collision_time, cfg)
}

/// Generates a scenario; a pure function of `cfg` including its seed.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<ConjunctionScenario, ConjunctionError> {
    generate_with(cfg, draw_debris)
}

fn generate_with<F>(cfg: &ScenarioConfig, mut draw: F) -> Result<ConjunctionScenario, ConjunctionError>
where
    F: FnMut(&ScenarioConfig, &mut crate::seed::Rng) -> Result<DebrisRecord, ConjunctionError>,
{
    cfg.validate()?;
    let mut rng = rng_from(cfg.rng_seed);
    let mut debris = Vec::with_capacity(cfg.n_debris);
    for index in 0..cfg.n_debris {
        let mut attempts = 0;
        let record = loop {
            attempts += 1;
            match draw(cfg, &mut rng) {
                Ok(record) => break record,
                Err(ConjunctionError::Resample(_)) if attempts < MAX_RECONSTRUCTION_RETRIES => {}
                Err(ConjunctionError::Resample(_)) => {
                    return Err(ConjunctionError::GenerationFailed { index, attempts })
                }
                Err(other) => return Err(other),
            }
        };
        debris.push(record);
    }
    Ok(ConjunctionScenario {
        config: cfg.clone(),
        debris,
    })
}

/// Distribution over scenario configurations used for batch generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioDistribution {
    /// Inclusive bounds on the number of debris.
    pub n_debris: [usize; 2],
    /// Bounds on `end_time - start_time`, s.
    pub span: [f64; 2],
    /// Log-uniform bounds on `sigma_pos`, m.
    pub sigma_pos: [f64; 2],
    pub sigma_vr: [f64; 2],
    /// Fixed fields (orbit, radii, fuel, angles) copied into every sample.
    pub template: ScenarioConfig,
}

impl Default for ScenarioDistribution {
    fn default() -> Self {
        Self {
            n_debris: [1, 3],
            span: [2.0 * 3600.0, 6.0 * 3600.0],
            sigma_pos: [100.0, 2000.0],
            sigma_vr: [0.01, 0.1],
            template: ScenarioConfig::default(),
        }
    }
}

impl ScenarioDistribution {
    pub fn validate(&self) -> Result<(), ConjunctionError> {
        let fail = |msg: &str| Err(ConjunctionError::InvalidConfig(msg.to_string()));
        if self.n_debris[0] == 0 || self.n_debris[0] > self.n_debris[1] {
            return fail("n_debris bounds must satisfy 1 <= lo <= hi");
        }
        if !(self.span[0] > 0.0 && self.span[0] <= self.span[1]) {
            return fail("span bounds must satisfy 0 < lo <= hi");
        }
        if !(self.sigma_pos[0] > 0.0 && self.sigma_pos[0] <= self.sigma_pos[1]) {
            return fail("sigma_pos bounds must satisfy 0 < lo <= hi");
        }
        if !(self.sigma_vr[0] >= 0.0 && self.sigma_vr[0] <= self.sigma_vr[1]) {
            return fail("sigma_vr bounds must satisfy 0 <= lo <= hi");
        }
        self.template.validate()
    }

    /// Draws a configuration; its `rng_seed` is derived from `seed`.
    pub fn sample_config(&self, seed: u64) -> ScenarioConfig {
        let mut rng = rng_from(derive_seed(seed, &[0]));
        let uniform = |rng: &mut crate::seed::Rng, [lo, hi]: [f64; 2]| lo + (hi - lo) * rng.random::<f64>();
        let n_debris = rng.random_range(self.n_debris[0]..=self.n_debris[1]);
        let span = uniform(&mut rng, self.span);
        let log_sigma = uniform(&mut rng, [self.sigma_pos[0].ln(), self.sigma_pos[1].ln()]);
        let sigma_vr = uniform(&mut rng, self.sigma_vr);
        ScenarioConfig {
            end_time: self.template.start_time + span,
            n_debris,
            sigma_pos: log_sigma.exp(),
            sigma_vr,
            rng_seed: derive_seed(seed, &[1]),
            ..self.template.clone()
        }
    }
}
