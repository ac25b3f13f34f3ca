//! 2-D convolution and transposed convolution, batch-first `[B, C, H, W]`.
//!
//! Both are lowered to im2col / col2im plus one GEMM per example. Weight
//! gradients accumulate example by example in batch order.

use super::{LayerParams, Tensor};
use crate::error::{Error, Result};
use crate::scalar::{gemm, Layout, Real};

/// Square kernel, stride and zero padding shared by both spatial axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeometry {
    pub const fn new(kernel: usize, stride: usize, pad: usize) -> Self {
        ConvGeometry { kernel, stride, pad }
    }

    /// Output size of a convolution over `size` input pixels.
    pub fn conv_out(&self, size: usize) -> Result<usize> {
        if self.stride == 0 || self.kernel == 0 {
            return Err(Error::invalid("kernel and stride must be positive"));
        }
        let padded = size + 2 * self.pad;
        if self.kernel > padded {
            return Err(Error::shape(format!("kernel {} does not fit padded input {}", self.kernel, padded)));
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }

    /// Output size of a transposed convolution over `size` input pixels.
    pub fn deconv_out(&self, size: usize) -> Result<usize> {
        if self.stride == 0 || self.kernel == 0 || size == 0 {
            return Err(Error::invalid("kernel, stride and input size must be positive"));
        }
        let full = (size - 1) * self.stride + self.kernel;
        if full < 2 * self.pad + 1 {
            return Err(Error::shape(format!("padding {} consumes the whole output", self.pad)));
        }
        Ok(full - 2 * self.pad)
    }
}

/// Unfolds one `[C, H, W]` image into `[C·K·K, Ho·Wo]` columns.
#[allow(clippy::too_many_arguments)]
pub(crate) fn im2col<T: Real>(x: &[T], c: usize, h: usize, w: usize, g: ConvGeometry, ho: usize, wo: usize, cols: &mut [T]) {
    let k = g.kernel;
    let plane = ho * wo;
    for ch in 0..c {
        let src = &x[ch * h * w..(ch + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ch * k + ky) * k + kx;
                let dst = &mut cols[row * plane..(row + 1) * plane];
                for oy in 0..ho {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    let out_row = &mut dst[oy * wo..(oy + 1) * wo];
                    if iy < 0 || iy >= h as isize {
                        out_row.iter_mut().for_each(|v| *v = T::zero());
                        continue;
                    }
                    let src_row = &src[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, v) in out_row.iter_mut().enumerate() {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        *v = if ix < 0 || ix >= w as isize { T::zero() } else { src_row[ix as usize] };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters columns back onto `[C, H, W]`, accumulating.
#[allow(clippy::too_many_arguments)]
pub(crate) fn col2im_add<T: Real>(cols: &[T], c: usize, h: usize, w: usize, g: ConvGeometry, ho: usize, wo: usize, x: &mut [T]) {
    let k = g.kernel;
    let plane = ho * wo;
    for ch in 0..c {
        let dst = &mut x[ch * h * w..(ch + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ch * k + ky) * k + kx;
                let src = &cols[row * plane..(row + 1) * plane];
                for oy in 0..ho {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst_row = &mut dst[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, &v) in src[oy * wo..(oy + 1) * wo].iter().enumerate() {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        if ix >= 0 && ix < w as isize {
                            dst_row[ix as usize] += v;
                        }
                    }
                }
            }
        }
    }
}

fn dims4(t: &Tensor<impl Real>, what: &str) -> Result<[usize; 4]> {
    match *t.shape() {
        [b, c, h, w] => Ok([b, c, h, w]),
        ref s => Err(Error::shape(format!("{what}: expected [B, C, H, W], got {s:?}"))),
    }
}

/// Checks a `[A, B, K, K]` kernel against the geometry and returns `(A, B)`.
fn kernel_dims<T: Real>(p: &LayerParams<T>, g: ConvGeometry) -> Result<(usize, usize)> {
    match *p.weight.shape() {
        [a, b, k1, k2] if k1 == g.kernel && k2 == g.kernel => Ok((a, b)),
        ref s => Err(Error::shape(format!("{}: kernel {:?} does not match {}x{}", p.name, s, g.kernel, g.kernel))),
    }
}

/// Cross-correlation with zero padding. Weight `[C_out, C_in, K, K]`, bias `[C_out]`.
pub fn conv2d_forward<T: Real>(input: &Tensor<T>, params: &LayerParams<T>, g: ConvGeometry) -> Result<Tensor<T>> {
    let [b, cin, h, w] = dims4(input, "conv2d input")?;
    let (cout, wcin) = kernel_dims(params, g)?;
    if wcin != cin {
        return Err(Error::shape(format!("{}: input has {} channels, kernel expects {}", params.name, cin, wcin)));
    }
    if params.bias.len() != cout {
        return Err(Error::shape(format!("{}: bias length {} != {}", params.name, params.bias.len(), cout)));
    }
    let (ho, wo) = (g.conv_out(h)?, g.conv_out(w)?);
    let ckk = cin * g.kernel * g.kernel;
    let plane = ho * wo;
    let mut out = Tensor::zeros(&[b, cout, ho, wo]);
    let mut cols = vec![T::zero(); ckk * plane];
    let bias = params.bias.data();
    for n in 0..b {
        im2col(input.item(n), cin, h, w, g, ho, wo, &mut cols);
        let y = out.item_mut(n);
        for (co, chunk) in y.chunks_mut(plane).enumerate() {
            chunk.iter_mut().for_each(|v| *v = bias[co]);
        }
        gemm(T::one(), params.weight.data(), Layout::row_major(cout, ckk), &cols, Layout::row_major(ckk, plane), T::one(), y, Layout::row_major(cout, plane));
    }
    Ok(out)
}

/// Gradient of [`conv2d_forward`] with respect to its input; accumulates
/// weight and bias gradients into `params`.
pub fn conv2d_backward<T: Real>(grad_out: &Tensor<T>, input: &Tensor<T>, params: &mut LayerParams<T>, g: ConvGeometry) -> Result<Tensor<T>> {
    let [b, cin, h, w] = dims4(input, "conv2d input")?;
    let (cout, _) = kernel_dims(params, g)?;
    let (ho, wo) = (g.conv_out(h)?, g.conv_out(w)?);
    if grad_out.shape() != [b, cout, ho, wo] {
        return Err(Error::shape(format!("{}: grad_out {:?} != {:?}", params.name, grad_out.shape(), [b, cout, ho, wo])));
    }
    let ckk = cin * g.kernel * g.kernel;
    let plane = ho * wo;
    let mut grad_in = Tensor::zeros(input.shape());
    let mut cols = vec![T::zero(); ckk * plane];
    let mut dcols = vec![T::zero(); ckk * plane];
    for n in 0..b {
        let dy = grad_out.item(n);
        im2col(input.item(n), cin, h, w, g, ho, wo, &mut cols);
        // dW[cout, ckk] += dY[cout, plane] · cols^T
        gemm(T::one(), dy, Layout::row_major(cout, plane), &cols, Layout::transposed(ckk, plane), T::one(), params.weight_grad.data_mut(), Layout::row_major(cout, ckk));
        // dcols[ckk, plane] = W^T · dY
        gemm(T::one(), params.weight.data(), Layout::transposed(cout, ckk), dy, Layout::row_major(cout, plane), T::zero(), &mut dcols, Layout::row_major(ckk, plane));
        col2im_add(&dcols, cin, h, w, g, ho, wo, grad_in.item_mut(n));
        let bg = params.bias_grad.data_mut();
        for (co, chunk) in dy.chunks(plane).enumerate() {
            let mut s = T::zero();
            for &v in chunk {
                s += v;
            }
            bg[co] += s;
        }
    }
    Ok(grad_in)
}

/// Transposed convolution. Weight `[C_in, C_out, K, K]`, bias `[C_out]`.
///
/// Equals the input-gradient pass of a convolution with the same kernel
/// (plus bias).
pub fn deconv2d_forward<T: Real>(input: &Tensor<T>, params: &LayerParams<T>, g: ConvGeometry) -> Result<Tensor<T>> {
    let [b, cin, h, w] = dims4(input, "deconv2d input")?;
    let (wcin, cout) = kernel_dims(params, g)?;
    if wcin != cin {
        return Err(Error::shape(format!("{}: input has {} channels, kernel expects {}", params.name, cin, wcin)));
    }
    if params.bias.len() != cout {
        return Err(Error::shape(format!("{}: bias length {} != {}", params.name, params.bias.len(), cout)));
    }
    let (ho, wo) = (g.deconv_out(h)?, g.deconv_out(w)?);
    let ckk = cout * g.kernel * g.kernel;
    let plane_in = h * w;
    let plane_out = ho * wo;
    let mut out = Tensor::zeros(&[b, cout, ho, wo]);
    let mut cols = vec![T::zero(); ckk * plane_in];
    let bias = params.bias.data();
    for n in 0..b {
        // cols[cout·K·K, H·W] = W^T · X
        gemm(T::one(), params.weight.data(), Layout::transposed(cin, ckk), input.item(n), Layout::row_major(cin, plane_in), T::zero(), &mut cols, Layout::row_major(ckk, plane_in));
        let y = out.item_mut(n);
        for (co, chunk) in y.chunks_mut(plane_out).enumerate() {
            chunk.iter_mut().for_each(|v| *v = bias[co]);
        }
        col2im_add(&cols, cout, ho, wo, g, h, w, y);
    }
    Ok(out)
}

/// Gradient of [`deconv2d_forward`] with respect to its input; accumulates
/// weight and bias gradients into `params`.
pub fn deconv2d_backward<T: Real>(grad_out: &Tensor<T>, input: &Tensor<T>, params: &mut LayerParams<T>, g: ConvGeometry) -> Result<Tensor<T>> {
    let [b, cin, h, w] = dims4(input, "deconv2d input")?;
    let (_, cout) = kernel_dims(params, g)?;
    let (ho, wo) = (g.deconv_out(h)?, g.deconv_out(w)?);
    if grad_out.shape() != [b, cout, ho, wo] {
        return Err(Error::shape(format!("{}: grad_out {:?} != {:?}", params.name, grad_out.shape(), [b, cout, ho, wo])));
    }
    let ckk = cout * g.kernel * g.kernel;
    let plane_in = h * w;
    let plane_out = ho * wo;
    let mut grad_in = Tensor::zeros(input.shape());
    let mut cols = vec![T::zero(); ckk * plane_in];
    for n in 0..b {
        let dy = grad_out.item(n);
        im2col(dy, cout, ho, wo, g, h, w, &mut cols);
        // dX[cin, HW] = W[cin, ckk] · cols
        gemm(T::one(), params.weight.data(), Layout::row_major(cin, ckk), &cols, Layout::row_major(ckk, plane_in), T::zero(), grad_in.item_mut(n), Layout::row_major(cin, plane_in));
        // dW[cin, ckk] += X[cin, HW] · cols^T
        gemm(T::one(), input.item(n), Layout::row_major(cin, plane_in), &cols, Layout::transposed(ckk, plane_in), T::one(), params.weight_grad.data_mut(), Layout::row_major(cin, ckk));
        let bg = params.bias_grad.data_mut();
        for (co, chunk) in dy.chunks(plane_out).enumerate() {
            let mut s = T::zero();
            for &v in chunk {
                s += v;
            }
            bg[co] += s;
        }
    }
    Ok(grad_in)
}
