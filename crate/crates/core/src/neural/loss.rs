use super::NeuralError;
use crate::scalar::Scalar;

pub const DEFAULT_HUBER_DELTA: f64 = 1.0;

fn check_delta<T: Scalar>(delta: T) -> Result<(), NeuralError> {
    if delta > T::zero() {
        Ok(())
    } else {
        Err(NeuralError::Domain(format!(
            "Huber delta must be positive, got {delta}"
        )))
    }
}

/// `a^2 / 2` inside `[-delta, delta]`, `delta (|a| - delta / 2)` outside.
pub fn huber_loss<T: Scalar>(a: T, delta: T) -> Result<T, NeuralError> {
    check_delta(delta)?;
    let abs = a.abs();
    Ok(if abs <= delta {
        T::lit(0.5) * a * a
    } else {
        delta * (abs - T::lit(0.5) * delta)
    })
}

/// Derivative of [`huber_loss`] with respect to `a`: `a` clipped to `[-delta, delta]`.
pub fn huber_grad<T: Scalar>(a: T, delta: T) -> Result<T, NeuralError> {
    check_delta(delta)?;
    Ok(a.max(-delta).min(delta))
}
