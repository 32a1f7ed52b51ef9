use serde::{Deserialize, Serialize};

use super::kepler::{default_tolerance, eccentric_to_true, solve_kepler, true_to_eccentric};
use super::vec3::Vec3;
use super::OrbitError;
use crate::scalar::{wrap_two_pi, Scalar};

/// Earth's gravitational parameter in m³/s².
pub const EARTH_MU: f64 = 3.986_004_418e14;

/// Gravitational parameter of the central body.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GravParams<T> {
    pub mu_central_body: T,
}

impl<T: Scalar> GravParams<T> {
    pub fn new(mu_central_body: T) -> Result<Self, OrbitError> {
        if !(mu_central_body > T::zero() && mu_central_body.is_finite()) {
            return Err(OrbitError::Domain(format!(
                "gravitational parameter must be positive, got {mu_central_body}"
            )));
        }
        Ok(Self { mu_central_body })
    }

    pub fn earth() -> Self {
        Self {
            mu_central_body: T::lit(EARTH_MU),
        }
    }

    pub fn mu(&self) -> T {
        self.mu_central_body
    }
}

/// Osculating Keplerian elements of an elliptical orbit.
///
/// Field names follow the usual symbols: `a` semi-major axis (m), `e`
/// eccentricity, `i` inclination, `raan` longitude of the ascending node (W),
/// `arg_periapsis` (w) and `mean_anomaly` (M), all angles in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeplerianElements<T> {
    pub a: T,
    pub e: T,
    pub i: T,
    #[serde(rename = "W")]
    pub raan: T,
    #[serde(rename = "w")]
    pub arg_periapsis: T,
    #[serde(rename = "M")]
    pub mean_anomaly: T,
}

impl<T: Scalar> KeplerianElements<T> {
    /// Validates the elements and wraps `raan`, `arg_periapsis` and
    /// `mean_anomaly` into `[0, 2π)`.
    pub fn new(a: T, e: T, i: T, raan: T, arg_periapsis: T, mean_anomaly: T) -> Result<Self, OrbitError> {
        Self {
            a,
            e,
            i,
            raan,
            arg_periapsis,
            mean_anomaly,
        }
        .normalized()
    }

    /// Checks the invariants and returns a copy with wrapped angles.
    pub fn normalized(self) -> Result<Self, OrbitError> {
        if !(self.a > T::zero() && self.a.is_finite()) {
            return Err(OrbitError::Domain(format!(
                "semi-major axis must be positive, got {}",
                self.a
            )));
        }
        if !(self.e >= T::zero() && self.e < T::one()) {
            return Err(OrbitError::EccentricityOutOfRange(self.e.to_f64_lossless()));
        }
        if !(self.i >= T::zero() && self.i <= T::PI()) {
            return Err(OrbitError::Domain(format!(
                "inclination must lie in [0, pi], got {}",
                self.i
            )));
        }
        let angles = [self.raan, self.arg_periapsis, self.mean_anomaly];
        if angles.iter().any(|x| !x.is_finite()) {
            return Err(OrbitError::Domain("non-finite angle".into()));
        }
        Ok(Self {
            raan: wrap_two_pi(self.raan),
            arg_periapsis: wrap_two_pi(self.arg_periapsis),
            mean_anomaly: wrap_two_pi(self.mean_anomaly),
            ..self
        })
    }

    /// Mean motion `n = sqrt(mu / a^3)` in rad/s.
    pub fn mean_motion(&self, grav: &GravParams<T>) -> T {
        (grav.mu() / (self.a * self.a * self.a)).sqrt()
    }

    pub fn period(&self, grav: &GravParams<T>) -> T {
        T::TAU() / self.mean_motion(grav)
    }

    /// Specific orbital energy `-mu / 2a`.
    pub fn specific_energy(&self, grav: &GravParams<T>) -> T {
        -grav.mu() / (T::lit(2.0) * self.a)
    }

    /// Magnitude of the specific angular momentum `sqrt(mu a (1 - e^2))`.
    pub fn angular_momentum(&self, grav: &GravParams<T>) -> T {
        (grav.mu() * self.a * (T::one() - self.e * self.e)).sqrt()
    }

    /// Same orbit with the mean anomaly advanced by `n * dt`.
    pub fn advanced(&self, dt: T, grav: &GravParams<T>) -> Self {
        Self {
            mean_anomaly: wrap_two_pi(self.mean_anomaly + self.mean_motion(grav) * dt),
            ..*self
        }
    }

    pub fn cast<U: Scalar>(&self) -> KeplerianElements<U> {
        let c = |x: T| U::lit(x.to_f64_lossless());
        KeplerianElements {
            a: c(self.a),
            e: c(self.e),
            i: c(self.i),
            raan: c(self.raan),
            arg_periapsis: c(self.arg_periapsis),
            mean_anomaly: c(self.mean_anomaly),
        }
    }
}

/// Cartesian position (m) and velocity (m/s) at an epoch (s since scenario start).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector<T> {
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
    pub epoch: T,
}

impl<T: Scalar> StateVector<T> {
    pub fn new(position: Vec3<T>, velocity: Vec3<T>, epoch: T) -> Self {
        Self {
            position,
            velocity,
            epoch,
        }
    }

    /// `v^2 / 2 - mu / r`.
    pub fn specific_energy(&self, grav: &GravParams<T>) -> T {
        let v = self.velocity.norm();
        v * v * T::lit(0.5) - grav.mu() / self.position.norm()
    }

    pub fn angular_momentum(&self) -> Vec3<T> {
        self.position.cross(&self.velocity)
    }
}

/// Rotates a perifocal-frame vector into the inertial frame (`R3(-W) R1(-i) R3(-w)`).
fn perifocal_to_inertial<T: Scalar>(kep: &KeplerianElements<T>, p: T, q: T) -> Vec3<T> {
    let (sw, cw) = kep.arg_periapsis.sin_cos();
    let (so, co) = kep.raan.sin_cos();
    let (si, ci) = kep.i.sin_cos();
    // Columns of the rotation for the perifocal P and Q axes.
    let px = co * cw - so * sw * ci;
    let py = so * cw + co * sw * ci;
    let pz = sw * si;
    let qx = -co * sw - so * cw * ci;
    let qy = -so * sw + co * cw * ci;
    let qz = cw * si;
    Vec3::new(px * p + qx * q, py * p + qy * q, pz * p + qz * q)
}

/// Cartesian state of the orbit at the elements' own epoch (returned `epoch` is 0).
pub fn elements_to_state<T: Scalar>(
    kep: &KeplerianElements<T>,
    grav: &GravParams<T>,
) -> Result<StateVector<T>, OrbitError> {
    let kep = kep.normalized()?;
    let ecc_anomaly = solve_kepler(kep.mean_anomaly, kep.e, default_tolerance())?;
    let (sin_e, cos_e) = ecc_anomaly.sin_cos();
    let one = T::one();
    let b_over_a = (one - kep.e * kep.e).sqrt();
    let radius = kep.a * (one - kep.e * cos_e);
    let p = kep.a * (cos_e - kep.e);
    let q = kep.a * b_over_a * sin_e;
    let speed_scale = (grav.mu() * kep.a).sqrt() / radius;
    let vp = -speed_scale * sin_e;
    let vq = speed_scale * b_over_a * cos_e;
    Ok(StateVector {
        position: perifocal_to_inertial(&kep, p, q),
        velocity: perifocal_to_inertial(&kep, vp, vq),
        epoch: T::zero(),
    })
}

/// Below this eccentricity the periapsis direction is treated as undefined.
fn circular_threshold<T: Scalar>() -> T {
    T::epsilon() * T::lit(1e4)
}

/// Osculating elements of a Cartesian state.
///
/// Circular orbits get `arg_periapsis = 0` with the anomaly measured from the
/// ascending node; equatorial orbits get `raan = 0` with angles measured from +x.
pub fn state_to_elements<T: Scalar>(
    state: &StateVector<T>,
    grav: &GravParams<T>,
) -> Result<KeplerianElements<T>, OrbitError> {
    let mu = grav.mu();
    let r_vec = state.position;
    let v_vec = state.velocity;
    let r = r_vec.norm();
    let v = v_vec.norm();
    if !(r > T::zero()) || !r_vec.is_finite() || !v_vec.is_finite() {
        return Err(OrbitError::DegenerateOrbit);
    }
    let h_vec = r_vec.cross(&v_vec);
    let h = h_vec.norm();
    if !(h > T::epsilon().sqrt() * T::lit(1e-3) * r * v) {
        return Err(OrbitError::DegenerateOrbit);
    }

    let energy = v * v * T::lit(0.5) - mu / r;
    let rv = r_vec.dot(&v_vec);
    let e_vec = (r_vec * (v * v - mu / r) - v_vec * rv) * (T::one() / mu);
    let e = e_vec.norm();
    // Near-parabolic states are treated as unbound: their elements are ill-conditioned.
    if !(energy < T::zero()) || e >= T::one() - T::epsilon().sqrt() {
        return Err(OrbitError::Hyperbolic(e.to_f64_lossless()));
    }
    let a = -mu / (T::lit(2.0) * energy);

    let h_hat = h_vec * (T::one() / h);
    let i = h_hat.z().max(-T::one()).min(T::one()).acos();
    // Node vector k x h.
    let n_vec = Vec3::new(-h_vec.y(), h_vec.x(), T::zero());
    let n = n_vec.norm();
    let equatorial = n <= circular_threshold::<T>() * h;
    let circular = e <= circular_threshold::<T>();

    let raan = if equatorial {
        T::zero()
    } else {
        n_vec.y().atan2(n_vec.x())
    };
    let hz_sign = if h_vec.z() >= T::zero() { T::one() } else { -T::one() };

    // Angle of `target` measured from the reference line in the orbit plane.
    let in_plane_angle = |target: &Vec3<T>| -> T {
        if equatorial {
            (hz_sign * target.y()).atan2(target.x())
        } else {
            let sin_part = n_vec.cross(target).dot(&h_hat);
            let cos_part = n_vec.dot(target);
            sin_part.atan2(cos_part)
        }
    };

    let (arg_periapsis, true_anomaly) = if circular {
        (T::zero(), in_plane_angle(&r_vec))
    } else {
        let w = in_plane_angle(&e_vec);
        let sin_nu = e_vec.cross(&r_vec).dot(&h_hat);
        let cos_nu = e_vec.dot(&r_vec);
        (w, sin_nu.atan2(cos_nu))
    };

    let ecc_anomaly = true_to_eccentric(wrap_two_pi(true_anomaly), e);
    let mean_anomaly = ecc_anomaly - e * ecc_anomaly.sin();

    KeplerianElements::new(a, e, i, raan, arg_periapsis, mean_anomaly)
}

/// True anomaly of the elements' current position.
pub fn true_anomaly<T: Scalar>(kep: &KeplerianElements<T>) -> Result<T, OrbitError> {
    let ecc_anomaly = solve_kepler(kep.mean_anomaly, kep.e, default_tolerance())?;
    Ok(eccentric_to_true(ecc_anomaly, kep.e))
}
