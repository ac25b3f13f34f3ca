//! Procedural shapes, the software renderer, and the viewgrid dataset container.

mod dataset;
mod render;
mod sdf;

pub use dataset::{generate_dataset, ClassInfo, Dataset, DatasetConfig, DatasetObject, Split};
pub use render::{render_view, render_view_into, render_viewgrid, sin_cos_deg, CameraPose, RenderConfig};
pub use sdf::{Family, ParamRange, Primitive, ShapeSpec, Solid, Vec3, NORMALIZED_RADIUS};
