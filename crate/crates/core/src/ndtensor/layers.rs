//! Stateful layer wrappers: each caches what its backward pass needs.

use super::*;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A differentiable stage of a network.
///
/// `infer` is pure and leaves the layer untouched; `forward` additionally
/// caches the values `backward` consumes. Calling `backward` without a
/// preceding `forward` fails with [`Error::MissingCache`].
pub trait Layer<T: Real> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>>;
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>>;
    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>>;
    fn clear_cache(&mut self);

    fn params(&self) -> Option<&LayerParams<T>> {
        None
    }

    fn params_mut(&mut self) -> Option<&mut LayerParams<T>> {
        None
    }
}

#[derive(Clone, Debug)]
pub struct Conv2d<T> {
    pub params: LayerParams<T>,
    pub geometry: ConvGeometry,
    cache: Option<Tensor<T>>,
}

impl<T: Real> Conv2d<T> {
    pub fn new(params: LayerParams<T>, geometry: ConvGeometry) -> Self {
        Conv2d { params, geometry, cache: None }
    }
}

impl<T: Real> Layer<T> for Conv2d<T> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        conv2d_forward(x, &self.params, self.geometry)
    }

    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = conv2d_forward(x, &self.params, self.geometry)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.cache.as_ref().ok_or(Error::MissingCache)?;
        conv2d_backward(grad_out, x, &mut self.params, self.geometry)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }

    fn params(&self) -> Option<&LayerParams<T>> {
        Some(&self.params)
    }

    fn params_mut(&mut self) -> Option<&mut LayerParams<T>> {
        Some(&mut self.params)
    }
}

#[derive(Clone, Debug)]
pub struct Deconv2d<T> {
    pub params: LayerParams<T>,
    pub geometry: ConvGeometry,
    cache: Option<Tensor<T>>,
}

impl<T: Real> Deconv2d<T> {
    pub fn new(params: LayerParams<T>, geometry: ConvGeometry) -> Self {
        Deconv2d { params, geometry, cache: None }
    }
}

impl<T: Real> Layer<T> for Deconv2d<T> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        deconv2d_forward(x, &self.params, self.geometry)
    }

    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = deconv2d_forward(x, &self.params, self.geometry)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.cache.as_ref().ok_or(Error::MissingCache)?;
        deconv2d_backward(grad_out, x, &mut self.params, self.geometry)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }

    fn params(&self) -> Option<&LayerParams<T>> {
        Some(&self.params)
    }

    fn params_mut(&mut self) -> Option<&mut LayerParams<T>> {
        Some(&mut self.params)
    }
}

#[derive(Clone, Debug)]
pub struct Linear<T> {
    pub params: LayerParams<T>,
    cache: Option<Tensor<T>>,
}

impl<T: Real> Linear<T> {
    pub fn new(params: LayerParams<T>) -> Self {
        Linear { params, cache: None }
    }
}

impl<T: Real> Layer<T> for Linear<T> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        linear_forward(x, &self.params)
    }

    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = linear_forward(x, &self.params)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.cache.as_ref().ok_or(Error::MissingCache)?;
        linear_backward(grad_out, x, &mut self.params)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }

    fn params(&self) -> Option<&LayerParams<T>> {
        Some(&self.params)
    }

    fn params_mut(&mut self) -> Option<&mut LayerParams<T>> {
        Some(&mut self.params)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Relu<T> {
    cache: Option<Tensor<T>>,
}

impl<T: Real> Relu<T> {
    pub fn new() -> Self {
        Relu { cache: None }
    }

    /// Cached output of the last `forward`, if any.
    pub fn output(&self) -> Option<&Tensor<T>> {
        self.cache.as_ref()
    }
}

impl<T: Real> Layer<T> for Relu<T> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(relu_forward(x))
    }

    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = relu_forward(x);
        self.cache = Some(y.clone());
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.cache.as_ref().ok_or(Error::MissingCache)?;
        relu_backward(grad_out, y)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}

#[derive(Clone, Debug, Default)]
pub struct Sigmoid<T> {
    cache: Option<Tensor<T>>,
}

impl<T: Real> Sigmoid<T> {
    pub fn new() -> Self {
        Sigmoid { cache: None }
    }
}

impl<T: Real> Layer<T> for Sigmoid<T> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(sigmoid_forward(x))
    }

    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = sigmoid_forward(x);
        self.cache = Some(y.clone());
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.cache.as_ref().ok_or(Error::MissingCache)?;
        sigmoid_backward(grad_out, y)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}
