use ndarray::{Array1, Array2, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::NeuralError;
use crate::scalar::Scalar;

/// Layer widths of the Q-network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub obs_dim: usize,
    pub hidden_size: usize,
    pub n_actions: usize,
}

impl NetworkShape {
    pub fn new(obs_dim: usize, hidden_size: usize, n_actions: usize) -> Result<Self, NeuralError> {
        if obs_dim == 0 || hidden_size == 0 || n_actions == 0 {
            return Err(NeuralError::Shape(format!(
                "network widths must be positive, got obs_dim={obs_dim} hidden_size={hidden_size} n_actions={n_actions}"
            )));
        }
        Ok(Self {
            obs_dim,
            hidden_size,
            n_actions,
        })
    }
}

/// LSTM weights and dense head.
///
/// Gate blocks are stacked row-wise in the order input, forget, candidate,
/// output, so `w_ih` is `4H x I`, `w_hh` is `4H x H` and `b` has `4H` entries.
/// The same struct holds gradients and optimizer moments.
#[derive(Clone, Debug, PartialEq)]
pub struct QNetworkParams<T> {
    pub w_ih: Array2<T>,
    pub w_hh: Array2<T>,
    pub b: Array1<T>,
    pub head_w: Array2<T>,
    pub head_b: Array1<T>,
}

pub(crate) const TENSOR_NAMES: [&str; 5] = ["w_ih", "w_hh", "b", "head_w", "head_b"];

impl<T: Scalar> QNetworkParams<T> {
    pub fn zeros(shape: NetworkShape) -> Self {
        let NetworkShape {
            obs_dim: i,
            hidden_size: h,
            n_actions: a,
        } = shape;
        Self {
            w_ih: Array2::zeros((4 * h, i)),
            w_hh: Array2::zeros((4 * h, h)),
            b: Array1::zeros(4 * h),
            head_w: Array2::zeros((a, h)),
            head_b: Array1::zeros(a),
        }
    }

    /// Uniform in `±1/sqrt(fan_in)` per tensor: the input width for `w_ih`,
    /// the hidden width for everything else.
    pub fn init<R: Rng + ?Sized>(shape: NetworkShape, rng: &mut R) -> Self {
        let mut p = Self::zeros(shape);
        let fan_ins = [
            shape.obs_dim,
            shape.hidden_size,
            shape.hidden_size,
            shape.hidden_size,
            shape.hidden_size,
        ];
        for (tensor, fan_in) in p.tensors_mut().into_iter().zip(fan_ins) {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            for x in tensor {
                *x = T::lit(dist.sample(rng));
            }
        }
        p
    }

    pub fn shape(&self) -> NetworkShape {
        NetworkShape {
            obs_dim: self.w_ih.ncols(),
            hidden_size: self.w_hh.ncols(),
            n_actions: self.head_b.len(),
        }
    }

    /// Checks that every tensor agrees with the widths implied by `w_ih`,
    /// `w_hh` and `head_b`.
    pub fn validate(&self) -> Result<NetworkShape, NeuralError> {
        let s = self.shape();
        let h = s.hidden_size;
        let ok = self.w_ih.nrows() == 4 * h
            && self.w_hh.dim() == (4 * h, h)
            && self.b.len() == 4 * h
            && self.head_w.dim() == (s.n_actions, h);
        if !ok || h == 0 || s.obs_dim == 0 || s.n_actions == 0 {
            return Err(NeuralError::Shape(format!(
                "inconsistent parameter tensors: w_ih {:?}, w_hh {:?}, b {}, head_w {:?}, head_b {}",
                self.w_ih.dim(),
                self.w_hh.dim(),
                self.b.len(),
                self.head_w.dim(),
                self.head_b.len()
            )));
        }
        Ok(s)
    }

    pub(crate) fn ensure_same_shape(&self, other: &Self) -> Result<(), NeuralError> {
        if self.shape() != other.shape() {
            return Err(NeuralError::Shape(format!(
                "parameter sets differ: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// Tensors in checkpoint order, flattened row-major.
    pub fn tensors(&self) -> [&[T]; 5] {
        [
            self.w_ih.as_slice().expect("standard layout"),
            self.w_hh.as_slice().expect("standard layout"),
            self.b.as_slice().expect("standard layout"),
            self.head_w.as_slice().expect("standard layout"),
            self.head_b.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [T]; 5] {
        [
            self.w_ih.as_slice_mut().expect("standard layout"),
            self.w_hh.as_slice_mut().expect("standard layout"),
            self.b.as_slice_mut().expect("standard layout"),
            self.head_w.as_slice_mut().expect("standard layout"),
            self.head_b.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Largest absolute entry over all tensors.
    pub fn max_abs(&self) -> T {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// `self <- tau * online + (1 - tau) * self`, element-wise.
    pub fn blend_from(&mut self, online: &Self, tau: T) -> Result<(), NeuralError> {
        self.ensure_same_shape(online)?;
        let keep = T::one() - tau;
        for (dst, src) in self.tensors_mut().into_iter().zip(online.tensors()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = tau * s + keep * *d;
            }
        }
        Ok(())
    }

    /// Element-wise `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Self, scale: T) -> Result<(), NeuralError> {
        self.ensure_same_shape(other)?;
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = *d + scale * s;
            }
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> QNetworkParams<U> {
        let c2 = |a: &Array2<T>| a.mapv(|x| U::lit(x.to_f64_lossless()));
        let c1 = |a: &Array1<T>| a.mapv(|x| U::lit(x.to_f64_lossless()));
        QNetworkParams {
            w_ih: c2(&self.w_ih),
            w_hh: c2(&self.w_hh),
            b: c1(&self.b),
            head_w: c2(&self.head_w),
            head_b: c1(&self.head_b),
        }
    }

    /// Bit-level equality, distinguishing `-0.0` from `0.0` and comparing NaN payloads.
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        if self.shape() != other.shape() {
            return false;
        }
        let bytes = |p: &Self| {
            let mut out = Vec::new();
            for t in p.tensors() {
                for &x in t {
                    x.write_le(&mut out);
                }
            }
            out
        };
        bytes(self) == bytes(other)
    }

    pub(crate) fn map_inplace2(&mut self, other: &Self, f: impl Fn(&mut T, T)) {
        Zip::from(&mut self.w_ih).and(&other.w_ih).for_each(|a, &b| f(a, b));
        Zip::from(&mut self.w_hh).and(&other.w_hh).for_each(|a, &b| f(a, b));
        Zip::from(&mut self.b).and(&other.b).for_each(|a, &b| f(a, b));
        Zip::from(&mut self.head_w).and(&other.head_w).for_each(|a, &b| f(a, b));
        Zip::from(&mut self.head_b).and(&other.head_b).for_each(|a, &b| f(a, b));
    }
}
