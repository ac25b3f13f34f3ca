use super::{LayerParams, Tensor};
use crate::error::{Error, Result};
use crate::scalar::{gemm, Layout, Real};

fn check<T: Real>(input: &Tensor<T>, params: &LayerParams<T>) -> Result<(usize, usize, usize)> {
    let (out_dim, in_dim) = match *params.weight.shape() {
        [o, i] => (o, i),
        ref s => return Err(Error::shape(format!("{}: weight must be [out, in], got {:?}", params.name, s))),
    };
    if input.rank() < 1 || input.item_len() != in_dim || (input.rank() == 1 && input.len() != in_dim) {
        return Err(Error::shape(format!("{}: input {:?} does not flatten to {} features", params.name, input.shape(), in_dim)));
    }
    if params.bias.len() != out_dim {
        return Err(Error::shape(format!("{}: bias length {} != {}", params.name, params.bias.len(), out_dim)));
    }
    let batch = if input.rank() == 1 { 1 } else { input.batch() };
    Ok((batch, in_dim, out_dim))
}

/// Affine map `y = W·x + b` applied to each leading-dimension item.
///
/// Weight `[out, in]`; the input is `[B, ...]` flattened to `[B, in]`
/// (a rank-1 input is treated as a batch of one). Output `[B, out]`.
pub fn linear_forward<T: Real>(input: &Tensor<T>, params: &LayerParams<T>) -> Result<Tensor<T>> {
    let (b, in_dim, out_dim) = check(input, params)?;
    let mut out = Tensor::zeros(&[b, out_dim]);
    for n in 0..b {
        out.item_mut(n).copy_from_slice(params.bias.data());
    }
    gemm(T::one(), input.data(), Layout::row_major(b, in_dim), params.weight.data(), Layout::transposed(out_dim, in_dim), T::one(), out.data_mut(), Layout::row_major(b, out_dim));
    Ok(out)
}

/// Gradient with respect to the input (same shape as `input`); accumulates
/// weight and bias gradients.
pub fn linear_backward<T: Real>(grad_out: &Tensor<T>, input: &Tensor<T>, params: &mut LayerParams<T>) -> Result<Tensor<T>> {
    let (b, in_dim, out_dim) = check(input, params)?;
    if grad_out.len() != b * out_dim {
        return Err(Error::shape(format!("{}: grad_out {:?} != [{}, {}]", params.name, grad_out.shape(), b, out_dim)));
    }
    // dW[out, in] += dY^T[out, B] · X[B, in]
    gemm(T::one(), grad_out.data(), Layout::transposed(b, out_dim), input.data(), Layout::row_major(b, in_dim), T::one(), params.weight_grad.data_mut(), Layout::row_major(out_dim, in_dim));
    let bg = params.bias_grad.data_mut();
    for n in 0..b {
        for (g, &d) in bg.iter_mut().zip(grad_out.item(n)) {
            *g += d;
        }
    }
    let mut grad_in = Tensor::zeros(input.shape());
    gemm(T::one(), grad_out.data(), Layout::row_major(b, out_dim), params.weight.data(), Layout::row_major(out_dim, in_dim), T::zero(), grad_in.data_mut(), Layout::row_major(b, in_dim));
    Ok(grad_in)
}
