use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ConjunctionError;
use crate::orbit::Vec3;
use crate::scalar::Scalar;

/// Closed angle interval `[lo, hi]` in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
pub struct AngleRange<T: Copy> {
    pub lo: T,
    pub hi: T,
}

impl<T: Copy> AngleRange<T> {
    pub const fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }
}

impl<T: Copy> From<[T; 2]> for AngleRange<T> {
    fn from([lo, hi]: [T; 2]) -> Self {
        Self { lo, hi }
    }
}

impl<T: Copy> From<AngleRange<T>> for [T; 2] {
    fn from(r: AngleRange<T>) -> Self {
        [r.lo, r.hi]
    }
}

fn unit_interval<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.random::<f64>())
}

/// Uniform draw from `[start, end]`.
pub fn sample_collision_time<T: Scalar, R: Rng + ?Sized>(start: T, end: T, rng: &mut R) -> Result<T, ConjunctionError> {
    if !(start <= end) {
        return Err(ConjunctionError::Domain(format!(
            "collision window start {start} exceeds end {end}"
        )));
    }
    let u: T = unit_interval(rng);
    Ok((start + (end - start) * u).min(end))
}

/// Per-axis independent normal placement around `projected_pos`.
pub fn place_debris_position<T: Scalar, R: Rng + ?Sized>(projected_pos: Vec3<T>, sigma_pos: T, rng: &mut R) -> Vec3<T> {
    let offset = Vec3::new(
        T::standard_normal(rng),
        T::standard_normal(rng),
        T::standard_normal(rng),
    );
    projected_pos + offset * sigma_pos
}

/// Rotates `vel` by `theta` towards the orbit normal `w = pos x vel`:
/// `cos(theta) vel + |vel| sin(theta) w / |w|`. The norm of `vel` is preserved.
pub fn rotate_velocity<T: Scalar>(vel: Vec3<T>, pos: Vec3<T>, theta: T) -> Result<Vec3<T>, ConjunctionError> {
    let normal = pos.cross(&vel);
    let normal_norm = normal.norm();
    if !(normal_norm > T::epsilon() * pos.norm() * vel.norm()) {
        return Err(ConjunctionError::DegenerateGeometry);
    }
    let (sin_t, cos_t) = theta.sin_cos();
    Ok(vel * cos_t + normal * (vel.norm() * sin_t / normal_norm))
}

/// Picks one of the two ranges with probability 1/2, then draws uniformly inside it.
pub fn sample_theta<T: Scalar, R: Rng + ?Sized>(
    ranges: &[AngleRange<T>; 2],
    rng: &mut R,
) -> Result<T, ConjunctionError> {
    for r in ranges {
        if !(r.lo <= r.hi) {
            return Err(ConjunctionError::Domain(format!(
                "empty angle range [{}, {}]",
                r.lo, r.hi
            )));
        }
    }
    let range = if rng.random::<bool>() { ranges[0] } else { ranges[1] };
    let u: T = unit_interval(rng);
    Ok((range.lo + (range.hi - range.lo) * u).min(range.hi))
}

/// Scales `vel` by `s ~ N(1, sigma_vr)`, redrawing until `s > 0`.
pub fn apply_velocity_noise<T: Scalar, R: Rng + ?Sized>(vel: Vec3<T>, sigma_vr: T, rng: &mut R) -> Vec3<T> {
    loop {
        let s = T::one() + sigma_vr * T::standard_normal(rng);
        if s > T::zero() {
            return vel * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn collision_time_bounds() {
        let mut rng = rng_from(1);
        assert_eq!(sample_collision_time(0.0, 0.0, &mut rng).unwrap(), 0.0);
        for _ in 0..1000 {
            let t = sample_collision_time(0.0, 3600.0, &mut rng).unwrap();
            assert!((0.0..=3600.0).contains(&t));
        }
        assert!(sample_collision_time(10.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn collision_time_is_uniform_ks() {
        let mut rng = rng_from(2);
        let mut xs: Vec<f64> = (0..10_000)
            .map(|_| sample_collision_time(0.0, 1.0, &mut rng).unwrap())
            .collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let lo = x - k as f64 / n;
                let hi = (k as f64 + 1.0) / n - x;
                lo.max(hi)
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn zero_sigma_placement_is_exact() {
        let mut rng = rng_from(3);
        let c = Vec3::new(7.0e6, -1.0e3, 42.0);
        assert_eq!(place_debris_position(c, 0.0, &mut rng), c);
    }

    #[test]
    fn placement_statistics() {
        let mut rng = rng_from(4);
        let c = Vec3::new(7.0e6, 1.0e6, -2.0e6);
        let n = 10_000;
        let samples: Vec<Vec3<f64>> = (0..n).map(|_| place_debris_position(c, 100.0, &mut rng)).collect();
        for axis in 0..3 {
            let mean = samples.iter().map(|s| s[axis]).sum::<f64>() / n as f64;
            let var = samples.iter().map(|s| (s[axis] - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            assert!((mean - c[axis]).abs() < 3.0, "axis {axis} mean {mean}");
            assert!((95.0..=105.0).contains(&var.sqrt()), "axis {axis} std {}", var.sqrt());
        }
        let bound = 3.0 * 100.0 * 3f64.sqrt();
        let inside = samples.iter().filter(|s| (**s - c).norm() <= bound).count();
        assert!(inside as f64 / n as f64 > 0.99);
    }

    #[test]
    fn rotation_identity_and_quarter_turn() {
        let pos = Vec3::new(7.0e6, 0.0, 0.0);
        let vel = Vec3::new(0.0, 7500.0, 10.0);
        assert_eq!(rotate_velocity(vel, pos, 0.0).unwrap(), vel);
        let q = rotate_velocity(vel, pos, FRAC_PI_2).unwrap();
        assert!(q.dot(&vel).abs() < 1e-6 * vel.norm() * vel.norm());
        let w_hat = pos.cross(&vel) * (1.0 / pos.cross(&vel).norm());
        assert!((q - w_hat * vel.norm()).norm() < 1e-9);
    }

    #[test]
    fn rotation_rejects_collinear_input() {
        let pos = Vec3::new(7.0e6, 0.0, 0.0);
        assert!(matches!(
            rotate_velocity(Vec3::new(3.0, 0.0, 0.0), pos, 0.1),
            Err(ConjunctionError::DegenerateGeometry)
        ));
    }

    #[test]
    fn rotation_preserves_norm_on_random_draws() {
        let mut rng = rng_from(5);
        for _ in 0..1000 {
            let pos = Vec3::new(
                rng.random_range(-1e7..1e7),
                rng.random_range(-1e7..1e7),
                rng.random_range(-1e7..1e7),
            );
            let vel = Vec3::new(
                rng.random_range(-8e3..8e3),
                rng.random_range(-8e3..8e3),
                rng.random_range(-8e3..8e3),
            );
            let theta = rng.random_range(-PI..PI);
            let out = rotate_velocity(vel, pos, theta).unwrap();
            assert!((out.norm() / vel.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn theta_point_ranges() {
        let mut rng = rng_from(6);
        let ranges = [AngleRange::new(0.1, 0.1), AngleRange::new(0.2, 0.2)];
        for _ in 0..100 {
            let t = sample_theta(&ranges, &mut rng).unwrap();
            assert!(t == 0.1 || t == 0.2);
        }
    }

    #[test]
    fn theta_range_selection_is_fair() {
        let mut rng = rng_from(7);
        let ranges = [AngleRange::new(0.01, 0.3), AngleRange::new(0.4, 0.7)];
        let n = 10_000;
        let first = (0..n)
            .filter(|_| sample_theta(&ranges, &mut rng).unwrap() <= 0.3)
            .count();
        let frac = first as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 0.02, "{frac}");
    }

    #[test]
    fn theta_identical_ranges_and_empty_range() {
        let mut rng = rng_from(8);
        let same = [AngleRange::new(0.05, 0.2), AngleRange::new(0.05, 0.2)];
        for _ in 0..100 {
            let t = sample_theta(&same, &mut rng).unwrap();
            assert!((0.05..=0.2).contains(&t));
        }
        let empty = [AngleRange::new(0.3, 0.2), AngleRange::new(0.05, 0.2)];
        assert!(sample_theta(&empty, &mut rng).is_err());
    }

    #[test]
    fn velocity_noise_properties() {
        let mut rng = rng_from(9);
        let vel = Vec3::new(1000.0, -7000.0, 2.0);
        assert_eq!(apply_velocity_noise(vel, 0.0, &mut rng), vel);
        let n = 10_000;
        let mut ratio_sum = 0.0;
        for _ in 0..n {
            let out = apply_velocity_noise(vel, 0.05, &mut rng);
            assert!(out.cross(&vel).norm() <= 1e-9 * vel.norm() * out.norm());
            assert!(out.dot(&vel) > 0.0);
            ratio_sum += out.norm() / vel.norm();
        }
        let mean = ratio_sum / n as f64;
        assert!((mean - 1.0).abs() <= 0.002, "{mean}");
    }

    #[test]
    fn large_noise_never_reverses_direction() {
        let mut rng = rng_from(10);
        let vel = Vec3::new(1.0, 2.0, 3.0);
        for _ in 0..1000 {
            assert!(apply_velocity_noise(vel, 2.0, &mut rng).dot(&vel) > 0.0);
        }
    }
}
