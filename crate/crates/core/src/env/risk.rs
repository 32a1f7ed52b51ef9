use crate::orbit::{GravParams, Orbit, OrbitError};
use crate::scalar::Scalar;

/// Probability that two objects collide under an isotropic Gaussian encounter
/// model: `min(1, R^2 / (2 sigma^2) * exp(-d^2 / (2 sigma^2)))`.
///
/// `sigma_c = 0` degenerates to the deterministic hard-body test `d <= R`.
pub fn collision_probability<T: Scalar>(miss_distance: T, combined_radius: T, sigma_c: T) -> T {
    if sigma_c <= T::zero() {
        return if miss_distance <= combined_radius {
            T::one()
        } else {
            T::zero()
        };
    }
    let two_var = T::lit(2.0) * sigma_c * sigma_c;
    let p = combined_radius * combined_radius / two_var * (-(miss_distance * miss_distance) / two_var).exp();
    p.min(T::one())
}

/// Time and distance of closest approach.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestApproach<T> {
    /// Offset from the search start, s.
    pub t_star: T,
    /// Separation at `t_star`, m.
    pub d_star: T,
}

const GOLDEN_ITERATIONS: usize = 80;

/// Minimum separation of two orbits over `[t_from, t_from + horizon]`.
///
/// A coarse scan at `coarse_dt` is refined by golden-section search on the
/// bracket around the best coarse sample. The returned distance never exceeds
/// the best coarse sample.
pub fn find_tca<T: Scalar>(
    protected: &Orbit<T>,
    debris: &Orbit<T>,
    t_from: T,
    horizon: T,
    coarse_dt: T,
    grav: &GravParams<T>,
) -> Result<ClosestApproach<T>, OrbitError> {
    if !(horizon >= T::zero()) || !(coarse_dt > T::zero()) {
        return Err(OrbitError::Domain(format!(
            "closest-approach search needs horizon >= 0 and coarse_dt > 0, got {horizon} and {coarse_dt}"
        )));
    }
    let distance = |offset: T| -> Result<T, OrbitError> {
        let t = t_from + offset;
        let a = protected.state_at(t, grav)?;
        let b = debris.state_at(t, grav)?;
        Ok((a.position - b.position).norm())
    };

    let n_intervals = (horizon / coarse_dt).ceil().to_usize().unwrap_or(0).max(1);
    let sample_time = |k: usize| (coarse_dt * T::lit(k as f64)).min(horizon);

    let mut best_k = 0;
    let mut best_d = distance(T::zero())?;
    for k in 1..=n_intervals {
        let d = distance(sample_time(k))?;
        if d < best_d {
            best_d = d;
            best_k = k;
        }
    }
    if horizon == T::zero() {
        return Ok(ClosestApproach {
            t_star: T::zero(),
            d_star: best_d,
        });
    }

    let mut lo = sample_time(best_k.saturating_sub(1));
    let mut hi = sample_time((best_k + 1).min(n_intervals));
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut x1 = hi - (hi - lo) * inv_phi;
    let mut x2 = lo + (hi - lo) * inv_phi;
    let mut f1 = distance(x1)?;
    let mut f2 = distance(x2)?;
    for _ in 0..GOLDEN_ITERATIONS {
        if hi - lo <= T::lit(1e-6) * (T::one() + hi.abs()) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - (hi - lo) * inv_phi;
            f1 = distance(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + (hi - lo) * inv_phi;
            f2 = distance(x2)?;
        }
    }
    let (t_ref, d_ref) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if d_ref < best_d {
        Ok(ClosestApproach {
            t_star: t_ref,
            d_star: d_ref,
        })
    } else {
        Ok(ClosestApproach {
            t_star: sample_time(best_k),
            d_star: best_d,
        })
    }
}
