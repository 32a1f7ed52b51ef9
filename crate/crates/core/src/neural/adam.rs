use serde::{Deserialize, Serialize};

use super::params::QNetworkParams;
use super::NeuralError;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub m: QNetworkParams<T>,
    pub v: QNetworkParams<T>,
    pub step: u64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(params: &QNetworkParams<T>) -> Self {
        Self {
            m: QNetworkParams::zeros(params.shape()),
            v: QNetworkParams::zeros(params.shape()),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Scalar>(
    params: &mut QNetworkParams<T>,
    grads: &QNetworkParams<T>,
    state: &mut OptimizerState<T>,
    cfg: &AdamConfig,
) -> Result<(), NeuralError> {
    params.ensure_same_shape(grads)?;
    params.ensure_same_shape(&state.m)?;
    params.ensure_same_shape(&state.v)?;
    state.step += 1;
    let b1 = T::lit(cfg.beta1);
    let b2 = T::lit(cfg.beta2);
    let one = T::one();
    state.m.map_inplace2(grads, |m, g| *m = b1 * *m + (one - b1) * g);
    state.v.map_inplace2(grads, |v, g| *v = b2 * *v + (one - b2) * g * g);
    let step = i32::try_from(state.step).unwrap_or(i32::MAX);
    let bias1 = 1.0 - cfg.beta1.powi(step);
    let bias2 = 1.0 - cfg.beta2.powi(step);
    let lr = T::lit(cfg.learning_rate);
    let c1 = T::lit(1.0 / bias1);
    let c2 = T::lit(1.0 / bias2);
    let eps = T::lit(cfg.eps);
    let moments = state.m.tensors().into_iter().zip(state.v.tensors());
    for (p, (m, v)) in params.tensors_mut().into_iter().zip(moments) {
        for ((p, &m), &v) in p.iter_mut().zip(m).zip(v) {
            *p = *p - lr * (m * c1) / ((v * c2).sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::NetworkShape;
    use crate::seed::rng_from;

    fn shape() -> NetworkShape {
        NetworkShape::new(3, 2, 4).unwrap()
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = QNetworkParams::<f64>::init(shape(), &mut rng_from(0));
        let before = p.clone();
        let mut st = OptimizerState::new(&p);
        let g = QNetworkParams::zeros(shape());
        adam_step(&mut p, &g, &mut st, &AdamConfig::default()).unwrap();
        assert!(p.bitwise_eq(&before));
        assert_eq!(st.step, 1);
    }

    #[test]
    fn constant_gradient_steps_approach_learning_rate() {
        let mut p = QNetworkParams::<f64>::zeros(shape());
        let mut g = QNetworkParams::<f64>::zeros(shape());
        for (k, t) in g.tensors_mut().into_iter().enumerate() {
            for (j, x) in t.iter_mut().enumerate() {
                *x = if (j + k) % 2 == 0 { 0.3 } else { -2.0 };
            }
        }
        let cfg = AdamConfig::with_learning_rate(1e-3);
        let mut st = OptimizerState::new(&p);
        let mut prev = p.clone();
        for _ in 0..1000 {
            prev = p.clone();
            adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        }
        // m_hat = g and v_hat = g^2 exactly, so every step is lr * g / (|g| + eps).
        for ((now, before), grad) in p.tensors().iter().zip(prev.tensors()).zip(g.tensors()) {
            for ((&a, &b), &gg) in now.iter().zip(before.iter()).zip(grad.iter()) {
                let step = a - b;
                assert!((step + 1e-3 * gg.signum()).abs() < 1e-9, "{step}");
            }
        }
        assert!(st.v.tensors().iter().all(|t| t.iter().all(|&x| x >= 0.0)));
    }

    #[test]
    fn identical_calls_identical_results() {
        let p0 = QNetworkParams::<f32>::init(shape(), &mut rng_from(1));
        let g = QNetworkParams::<f32>::init(shape(), &mut rng_from(2));
        let run = || {
            let mut p = p0.clone();
            let mut st = OptimizerState::new(&p);
            for _ in 0..5 {
                adam_step(&mut p, &g, &mut st, &AdamConfig::default()).unwrap();
            }
            (p, st)
        };
        let (a, sa) = run();
        let (b, sb) = run();
        assert!(a.bitwise_eq(&b));
        assert_eq!(sa, sb);
    }
}
