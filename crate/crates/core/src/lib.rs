//! ShapeCodes: learning 3D-aware image features by predicting an object's
//! full viewgrid from a single view.
//!
//! The core is generic over the scalar type (`f32` for training, `f64` for
//! gradient checks); the aliases below name the common instantiations.

pub mod binio;
pub mod error;
pub mod eval;
pub mod kv;
pub mod ndtensor;
pub mod net;
pub mod rng;
pub mod scalar;
pub mod shapeforge;
pub mod viewgrid;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Tensor32 = ndtensor::Tensor<f32>;
pub type Tensor64 = ndtensor::Tensor<f64>;
pub type Viewgrid32 = viewgrid::Viewgrid<f32>;
pub type Viewgrid64 = viewgrid::Viewgrid<f64>;
/// Training precision.
pub type Net32 = net::ShapeCodeNet<f32>;
/// Gradient-check precision.
pub type Net64 = net::ShapeCodeNet<f64>;
