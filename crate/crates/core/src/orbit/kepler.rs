use super::OrbitError;
use crate::scalar::{wrap_two_pi, Scalar};

/// Newton iterations attempted before switching to bisection.
pub const MAX_NEWTON_ITERATIONS: usize = 50;

const MAX_BISECTION_ITERATIONS: usize = 200;

/// Default residual tolerance: `1e-12`, loosened to a few ulps of `2π` for `f32`.
pub fn default_tolerance<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
}

/// Solves Kepler's equation `E - e sin E = M` for the eccentric anomaly.
///
/// `mean_anomaly` may be any finite angle; it is wrapped into `[0, 2π)` and the
/// returned anomaly lies in the same range. Newton's method is seeded at `E = M`
/// and falls back to bisection on `[0, 2π]`, where the residual is monotone.
pub fn solve_kepler<T: Scalar>(mean_anomaly: T, eccentricity: T, tol: T) -> Result<T, OrbitError> {
    if !(eccentricity >= T::zero() && eccentricity < T::one()) {
        return Err(OrbitError::EccentricityOutOfRange(eccentricity.to_f64_lossless()));
    }
    if !(tol > T::zero()) {
        return Err(OrbitError::Domain(format!(
            "kepler tolerance must be positive, got {tol}"
        )));
    }
    if !mean_anomaly.is_finite() {
        return Err(OrbitError::Domain("mean anomaly is not finite".into()));
    }
    let m = wrap_two_pi(mean_anomaly);
    if eccentricity == T::zero() {
        return Ok(m);
    }
    let residual = |e_anom: T| e_anom - eccentricity * e_anom.sin() - m;

    let mut e_anom = m;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let f = residual(e_anom);
        if f.abs() <= tol {
            if e_anom >= T::zero() && e_anom < T::TAU() {
                return Ok(e_anom);
            }
            break;
        }
        let slope = T::one() - eccentricity * e_anom.cos();
        e_anom = e_anom - f / slope;
        if !e_anom.is_finite() {
            break;
        }
    }

    // f(0) = -M <= 0 and f(2π) = 2π - M > 0.
    let mut lo = T::zero();
    let mut hi = T::TAU();
    let mut mid = m;
    for _ in 0..MAX_BISECTION_ITERATIONS {
        mid = (lo + hi) * T::lit(0.5);
        let f = residual(mid);
        if f.abs() <= tol || mid <= lo || mid >= hi {
            break;
        }
        if f < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Eccentric anomaly to true anomaly, in `[0, 2π)`.
pub fn eccentric_to_true<T: Scalar>(eccentric_anomaly: T, eccentricity: T) -> T {
    let half = eccentric_anomaly * T::lit(0.5);
    let nu = T::lit(2.0)
        * ((T::one() + eccentricity).sqrt() * half.sin()).atan2((T::one() - eccentricity).sqrt() * half.cos());
    wrap_two_pi(nu)
}

/// True anomaly to eccentric anomaly, in `[0, 2π)`.
pub fn true_to_eccentric<T: Scalar>(true_anomaly: T, eccentricity: T) -> T {
    let half = true_anomaly * T::lit(0.5);
    let e_anom = T::lit(2.0)
        * ((T::one() - eccentricity).sqrt() * half.sin()).atan2((T::one() + eccentricity).sqrt() * half.cos());
    wrap_two_pi(e_anom)
}
