use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn relu_forward<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Uses the forward *output*: the gradient passes where the output is positive.
pub fn relu_backward<T: Real>(grad_out: &Tensor<T>, output: &Tensor<T>) -> Result<Tensor<T>> {
    if !grad_out.same_shape(output) {
        return Err(Error::shape(format!("relu: grad {:?} vs output {:?}", grad_out.shape(), output.shape())));
    }
    let data = grad_out.data().iter().zip(output.data()).map(|(&g, &y)| if y > T::zero() { g } else { T::zero() }).collect();
    Tensor::from_vec(output.shape(), data)
}

pub fn sigmoid_forward<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| T::one() / (T::one() + (-v).exp()))
}

/// Uses the forward *output* `s`: `ds/dx = s (1 - s)`.
pub fn sigmoid_backward<T: Real>(grad_out: &Tensor<T>, output: &Tensor<T>) -> Result<Tensor<T>> {
    if !grad_out.same_shape(output) {
        return Err(Error::shape(format!("sigmoid: grad {:?} vs output {:?}", grad_out.shape(), output.shape())));
    }
    let data = grad_out.data().iter().zip(output.data()).map(|(&g, &s)| g * s * (T::one() - s)).collect();
    Tensor::from_vec(output.shape(), data)
}
