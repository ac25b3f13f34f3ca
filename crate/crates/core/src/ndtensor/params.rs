use rand::Rng;

use super::{uniform_init, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A named weight/bias pair with gradient accumulators and momentum buffers.
#[derive(Clone, Debug)]
pub struct LayerParams<T> {
    pub name: String,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub weight_grad: Tensor<T>,
    pub bias_grad: Tensor<T>,
    pub weight_velocity: Tensor<T>,
    pub bias_velocity: Tensor<T>,
}

impl<T: Real> LayerParams<T> {
    pub fn new(name: impl Into<String>, weight: Tensor<T>, bias: Tensor<T>) -> Self {
        LayerParams {
            name: name.into(),
            weight_grad: Tensor::zeros(weight.shape()),
            bias_grad: Tensor::zeros(bias.shape()),
            weight_velocity: Tensor::zeros(weight.shape()),
            bias_velocity: Tensor::zeros(bias.shape()),
            weight,
            bias,
        }
    }

    /// Weight then bias, both drawn from the uniform initialiser.
    pub fn uniform<R: Rng + ?Sized>(name: impl Into<String>, weight_shape: &[usize], bias_len: usize, rng: &mut R) -> Result<Self> {
        let weight = uniform_init(weight_shape, rng)?;
        let bias = uniform_init(&[bias_len], rng)?;
        Ok(Self::new(name, weight, bias))
    }

    pub fn zero_grad(&mut self) {
        self.weight_grad.fill(T::zero());
        self.bias_grad.fill(T::zero());
    }

    pub fn reset_velocity(&mut self) {
        self.weight_velocity.fill(T::zero());
        self.bias_velocity.fill(T::zero());
    }

    pub fn num_values(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    /// Replaces weight and bias values, keeping buffers.
    pub fn load(&mut self, weight: Tensor<T>, bias: Tensor<T>) -> Result<()> {
        if !weight.same_shape(&self.weight) || !bias.same_shape(&self.bias) {
            return Err(Error::shape(format!(
                "{}: expected weight {:?} / bias {:?}, got {:?} / {:?}",
                self.name,
                self.weight.shape(),
                self.bias.shape(),
                weight.shape(),
                bias.shape()
            )));
        }
        self.weight = weight;
        self.bias = bias;
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> LayerParams<U> {
        LayerParams::new(self.name.clone(), self.weight.cast(), self.bias.cast())
    }
}
