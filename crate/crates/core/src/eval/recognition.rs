//! The recognition protocol: k-NN over features of one split, queried with
//! every view of the held-out split, averaged over sampling seeds.

use super::knn::{network_features, pixel_features, recognition_accuracy, FeatureSet};
use super::report::ResultTable;
use crate::error::{Error, Result};
use crate::net::{FeatureLayer, NetConfig, ShapeCodeNet};
use crate::rng::{stream, Stream};
use crate::shapeforge::{Dataset, Split};

/// Where features come from.
pub enum FeatureSource<'a> {
    Pixels,
    /// fc1/fc2/fc3 of a network, reported under `method`.
    Network { method: &'a str, net: &'a ShapeCodeNet<f32> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnnProtocol {
    pub k: usize,
    pub per_class: usize,
    /// Sampling seeds; accuracies are averaged over them.
    pub seeds: Vec<u64>,
    /// `None` reports every layer plus the best.
    pub layer: Option<FeatureLayer>,
}

impl Default for KnnProtocol {
    fn default() -> Self {
        KnnProtocol { k: 5, per_class: 1000, seeds: vec![0], layer: None }
    }
}

/// Untrained network from the `RandomWeights` stream.
pub fn random_weights_net(config: NetConfig, seed: u64) -> Result<ShapeCodeNet<f32>> {
    ShapeCodeNet::with_rng(config, &mut stream(seed, Stream::RandomWeights, 0))
}

/// (pool split, query split, label) for seen or unseen classes.
pub fn recognition_splits(unseen: bool) -> (Split, Split, &'static str) {
    if unseen {
        (Split::UnseenTrain, Split::UnseenTest, "unseen")
    } else {
        (Split::Train, Split::Test, "seen")
    }
}

fn feature_sets(source: &FeatureSource, ds: &Dataset, objects: &[usize]) -> Result<Vec<FeatureSet>> {
    match source {
        FeatureSource::Pixels => Ok(vec![pixel_features(ds, objects)]),
        FeatureSource::Network { method, net } => network_features(*net, method, ds, objects),
    }
}

/// Accuracy rows `(method, layer, seen|unseen, accuracy, %)` for every
/// source, plus a `best` row per network source when all layers are reported.
pub fn recognition_table(ds: &Dataset, sources: &[FeatureSource], unseen: bool, protocol: &KnnProtocol) -> Result<ResultTable> {
    if protocol.seeds.is_empty() {
        return Err(Error::invalid("need at least one k-NN sampling seed"));
    }
    let (pool_split, query_split, label) = recognition_splits(unseen);
    let pool_objs = ds.indices(pool_split);
    let query_objs = ds.indices(query_split);
    if pool_objs.is_empty() || query_objs.is_empty() {
        return Err(Error::Empty(format!("{label} recognition needs non-empty {} and {} splits", pool_split.name(), query_split.name())));
    }
    let mut table = ResultTable::default();
    for source in sources {
        let pools = feature_sets(source, ds, &pool_objs)?;
        let queries = feature_sets(source, ds, &query_objs)?;
        let mut best: Option<f64> = None;
        let mut method = String::new();
        for (pool, query) in pools.iter().zip(&queries) {
            if let Some(l) = protocol.layer {
                if pool.layer != l.name() {
                    continue;
                }
            }
            let mut sum = 0.0;
            for &s in &protocol.seeds {
                sum += recognition_accuracy(pool, query, protocol.per_class, protocol.k, s)?;
            }
            let acc = sum / protocol.seeds.len() as f64;
            table.push(&pool.method, &pool.layer, label, "accuracy", acc);
            best = Some(best.map_or(acc, |b: f64| b.max(acc)));
            method = pool.method.clone();
        }
        if protocol.layer.is_none() && pools.len() > 1 {
            table.push(&method, "best", label, "accuracy", best.expect("at least one layer"));
        }
    }
    Ok(table)
}

/// Best-of-layers accuracy for `method` in a table from [`recognition_table`].
pub fn best_accuracy(table: &ResultTable, method: &str, label: &str) -> Option<f64> {
    table.find(method, "best", label, "accuracy").or_else(|| table.find(method, "-", label, "accuracy"))
}
