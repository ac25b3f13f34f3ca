//! Reconstruction baselines, reconstruction metrics, k-NN recognition and
//! the per-view error heatmap.

mod avg;
mod knn;
mod recognition;
mod recon;
mod report;

pub use avg::{fit_avg_predictor, AvgKind, AvgPredictor};
pub use knn::{knn_accuracy, knn_classify, network_features, pixel_features, recognition_accuracy, FeatureSet};
pub use recognition::{best_accuracy, random_weights_net, recognition_splits, recognition_table, FeatureSource, KnnProtocol};
pub use recon::{evaluate_reconstruction, per_view_mse_heatmap, ClassScore, Heatmap, ReconResult, Reconstructor};
pub use report::{recon_rows, ResultRow, ResultTable};
