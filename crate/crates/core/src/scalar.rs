//! Floating point abstraction shared by the orbital and neural math.

use std::fmt::{Debug, Display};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real scalar usable by every generic routine in the crate: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Tag written into checkpoint headers.
    const DTYPE: &'static str;
    /// Width in bytes of the little-endian encoding.
    const BYTES: usize;

    /// Converts an `f64` literal; lossy for `f32`.
    fn lit(value: f64) -> Self;

    fn to_f64_lossless(self) -> f64;

    fn write_le(self, out: &mut Vec<u8>);

    /// Decodes from exactly `Self::BYTES` little-endian bytes.
    fn read_le(bytes: &[u8]) -> Self;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f32 {
    const DTYPE: &'static str = "f32";
    const BYTES: usize = 4;

    #[inline]
    fn lit(value: f64) -> Self {
        value as f32
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        f64::from(self)
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut raw = [0u8; 4];
        raw.copy_from_slice(&bytes[..4]);
        f32::from_le_bytes(raw)
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Scalar for f64 {
    const DTYPE: &'static str = "f64";
    const BYTES: usize = 8;

    #[inline]
    fn lit(value: f64) -> Self {
        value
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut raw = [0u8; 8];
        raw.copy_from_slice(&bytes[..8]);
        f64::from_le_bytes(raw)
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_two_pi<T: Scalar>(angle: T) -> T {
    let tau = T::TAU();
    let mut wrapped = angle % tau;
    if wrapped < T::zero() {
        wrapped = wrapped + tau;
    }
    // `x % τ + τ` can round up to exactly τ for tiny negative inputs.
    if wrapped >= tau {
        wrapped = T::zero();
    }
    wrapped
}

/// Wraps an angle difference into `[-π, π)`.
pub fn wrap_pi<T: Scalar>(angle: T) -> T {
    let wrapped = wrap_two_pi(angle + T::PI()) - T::PI();
    if wrapped < -T::PI() {
        wrapped + T::TAU()
    } else {
        wrapped
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_two_pi_range() {
        for k in -50..50 {
            let x = f64::from(k) * 0.37;
            let w = wrap_two_pi(x);
            assert!((0.0..std::f64::consts::TAU).contains(&w), "{x} -> {w}");
        }
        assert_eq!(wrap_two_pi(-1e-20_f64), 0.0);
    }

    #[test]
    fn wrap_pi_small_differences_pass_through() {
        assert!((wrap_pi(0.25_f64) - 0.25).abs() < 1e-15);
        assert!((wrap_pi(-0.25_f64) + 0.25).abs() < 1e-15);
        assert!((wrap_pi(std::f64::consts::TAU - 0.1) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn byte_round_trip() {
        let mut buf = Vec::new();
        1.0e-300_f64.write_le(&mut buf);
        (-3.5_f32).write_le(&mut buf);
        assert_eq!(f64::read_le(&buf[..8]), 1.0e-300);
        assert_eq!(f32::read_le(&buf[8..]), -3.5);
    }
}
