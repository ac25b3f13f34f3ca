use rand::Rng;

use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Half-width of the symmetric uniform initialisation interval.
pub const INIT_RANGE: f64 = 0.1;

/// Tensor with every element drawn independently from `U[-0.1, 0.1]`.
///
/// Draws are made in `f64` and cast, so `f32` and `f64` tensors built from
/// the same generator state agree up to rounding.
pub fn uniform_init<T: Real, R: Rng + ?Sized>(shape: &[usize], rng: &mut R) -> Result<Tensor<T>> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::invalid(format!("uniform_init needs a non-empty shape, got {:?}", shape)));
    }
    let len: usize = shape.iter().product();
    let data = (0..len).map(|_| T::of(rng.gen_range(-INIT_RANGE..=INIT_RANGE))).collect();
    Tensor::from_vec(shape, data)
}
