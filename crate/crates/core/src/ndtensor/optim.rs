use super::LayerParams;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minibatch SGD with classical momentum.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { learning_rate: 0.01, momentum: 0.9, batch_size: 32 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        Ok(())
    }
}

/// One update over every parameter tensor:
/// `v ← momentum·v + grad`, `p ← p − lr·v`, then gradients are zeroed.
///
/// Gradients are expected to already hold the minibatch *average*. If any
/// gradient is non-finite nothing is modified and the offending layer is named.
pub fn sgd_momentum_step<'a, T: Real>(params: impl IntoIterator<Item = &'a mut LayerParams<T>>, config: &OptimizerConfig) -> Result<()> {
    config.validate()?;
    let mut params: Vec<&mut LayerParams<T>> = params.into_iter().collect();
    for p in &params {
        if !p.weight_grad.is_finite() || !p.bias_grad.is_finite() {
            return Err(Error::NonFinite(format!("gradient of {}", p.name)));
        }
    }
    let lr = T::of(config.learning_rate);
    let mu = T::of(config.momentum);
    for p in params.iter_mut() {
        let p = &mut **p;
        update(p.weight.data_mut(), p.weight_velocity.data_mut(), p.weight_grad.data(), lr, mu);
        update(p.bias.data_mut(), p.bias_velocity.data_mut(), p.bias_grad.data(), lr, mu);
        p.zero_grad();
    }
    Ok(())
}

fn update<T: Real>(values: &mut [T], velocity: &mut [T], grad: &[T], lr: T, mu: T) {
    for ((x, v), &g) in values.iter_mut().zip(velocity.iter_mut()).zip(grad) {
        *v = mu * *v + g;
        *x -= lr * *v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndtensor::Tensor;

    fn scalar_param(p: f64, g: f64) -> LayerParams<f64> {
        let mut lp = LayerParams::new("p", Tensor::full(&[1], p), Tensor::zeros(&[1]));
        lp.weight_grad.data_mut()[0] = g;
        lp
    }

    #[test]
    fn plain_sgd_step() {
        let mut p = scalar_param(1.0, 0.25);
        let cfg = OptimizerConfig { learning_rate: 1.0, momentum: 0.0, batch_size: 1 };
        sgd_momentum_step([&mut p], &cfg).unwrap();
        assert_eq!(p.weight.data()[0], 0.75);
        assert_eq!(p.weight_grad.data()[0], 0.0);
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut p = scalar_param(0.3, 0.0);
        sgd_momentum_step([&mut p], &OptimizerConfig::default()).unwrap();
        assert_eq!(p.weight.data()[0], 0.3);
        assert_eq!(p.bias.data()[0], 0.0);
    }

    #[test]
    fn momentum_sequence_matches_hand_calculation() {
        // lr 0.1, mu 0.9, p0 = 1, grads 1.0 then 0.5:
        // v1 = 1.0,  p1 = 0.9
        // v2 = 0.9 * 1.0 + 0.5 = 1.4,  p2 = 0.9 - 0.14 = 0.76
        let cfg = OptimizerConfig { learning_rate: 0.1, momentum: 0.9, batch_size: 32 };
        let mut p = scalar_param(1.0, 1.0);
        sgd_momentum_step([&mut p], &cfg).unwrap();
        assert!((p.weight_velocity.data()[0] - 1.0).abs() < 1e-15);
        assert!((p.weight.data()[0] - 0.9).abs() < 1e-15);
        p.weight_grad.data_mut()[0] = 0.5;
        sgd_momentum_step([&mut p], &cfg).unwrap();
        assert!((p.weight_velocity.data()[0] - 1.4).abs() < 1e-15);
        assert!((p.weight.data()[0] - 0.76).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_aborts_without_update() {
        let mut p = scalar_param(1.0, f64::NAN);
        let err = sgd_momentum_step([&mut p], &OptimizerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite(ref m) if m.contains('p')));
        assert_eq!(p.weight.data()[0], 1.0);
    }

    #[test]
    fn momentum_zero_is_vanilla_descent() {
        let cfg = OptimizerConfig { learning_rate: 0.05, momentum: 0.0, batch_size: 4 };
        let mut p = scalar_param(2.0, 0.0);
        let mut reference = 2.0f64;
        for g in [0.3, -1.2, 0.7, 0.01] {
            p.weight_grad.data_mut()[0] = g;
            sgd_momentum_step([&mut p], &cfg).unwrap();
            reference -= 0.05 * g;
            assert_eq!(p.weight.data()[0], reference);
        }
    }
}
