//! The viewgrid data model: grid specification, azimuth-relative alignment,
//! the training losses and reconstruction metrics.

mod grid;
mod loss;
mod pgm;
mod sphere;

pub use grid::{align_target, azimuth_shift, shift_columns_into, Viewgrid};
pub use loss::{aligned, alignment_loss, ca_loss, masked_loss, mse_metric_x1000, viewgrid_loss, Alignment};
pub use pgm::{montage, montage_tile, quantize, GrayImage, SEPARATOR};
pub use sphere::{sample_view_sphere, ViewIndex, ViewSphereSpec};
