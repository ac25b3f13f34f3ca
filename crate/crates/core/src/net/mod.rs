//! The ShapeCode encoder–decoder, its training loop and checkpoints.

mod checkpoint;
mod config;
mod model;
mod objective;
mod train;

pub use checkpoint::Checkpoint;
pub use config::{NetConfig, TrainConfig, Variant};
pub use model::{layer_shapes, FeatureLayer, Features, ShapeCodeNet, ELEVATION_SCALE, LAYER_NAMES};
pub use objective::NetObjective;
pub use train::{
    batch_inputs, epoch_examples, evaluate_loss, example_loss, train, train_step, train_with_progress, validation_examples, Example, LogRow, LrResult,
    TrainLog, TrainOutcome,
};

#[cfg(test)]
mod tests;
