//! Dense tensors and the hand-written differentiable kernels the network needs.
//!
//! All reductions run sequentially in index order (batch, then channel, then
//! spatial position), so results are bit-reproducible on a given machine.

mod activation;
mod conv;
pub mod gradcheck;
mod init;
mod layercheck;
mod layers;
mod linear;
mod loss;
mod optim;
mod params;
mod tensor;

pub use activation::{relu_backward, relu_forward, sigmoid_backward, sigmoid_forward};
pub use conv::{conv2d_backward, conv2d_forward, deconv2d_backward, deconv2d_forward, ConvGeometry};
pub use gradcheck::{grad_check, Evaluation, GradCheckConfig, GradCheckReport, Objective, TensorReport};
pub use init::{uniform_init, INIT_RANGE};
pub use layercheck::{LayerKind, LayerObjective};
pub use layers::{Conv2d, Deconv2d, Layer, Linear, Relu, Sigmoid};
pub use linear::{linear_backward, linear_forward};
pub use loss::{mse_mean, mse_mean_grad};
pub use optim::{sgd_momentum_step, OptimizerConfig};
pub use params::LayerParams;
pub use tensor::Tensor;
