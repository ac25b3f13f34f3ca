//! k-nearest-neighbour recognition over feature vectors.

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::net::{FeatureLayer, ShapeCodeNet};
use crate::rng::{stream, Stream};
use crate::scalar::Real;
use crate::shapeforge::Dataset;

/// Row-major feature matrix with one class label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    pub dim: usize,
    pub data: Vec<f32>,
    pub labels: Vec<u16>,
    /// e.g. `ours`, `pixels`.
    pub method: String,
    /// e.g. `fc3`, or `-` for raw pixels.
    pub layer: String,
}

impl FeatureSet {
    pub fn new(dim: usize, method: &str, layer: &str) -> Self {
        FeatureSet { dim, data: Vec::new(), labels: Vec::new(), method: method.into(), layer: layer.into() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push(&mut self, row: &[f32], label: u16) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::shape(format!("feature row of length {} in a {}-dim set", row.len(), self.dim)));
        }
        self.data.extend_from_slice(row);
        self.labels.push(label);
        Ok(())
    }

    /// Up to `per_class` rows of each class, sampled without replacement from
    /// the `KnnSample` stream of `seed`; kept rows stay in their original order.
    pub fn sample_per_class(&self, per_class: usize, seed: u64) -> FeatureSet {
        let mut classes: Vec<u16> = self.labels.clone();
        classes.sort_unstable();
        classes.dedup();
        let mut keep = Vec::new();
        for c in classes {
            let rows: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == c).collect();
            if rows.len() <= per_class {
                keep.extend(rows);
            } else {
                let mut rng = stream(seed, Stream::KnnSample, c as u32);
                keep.extend(sample(&mut rng, rows.len(), per_class).into_iter().map(|i| rows[i]));
            }
        }
        keep.sort_unstable();
        let mut out = FeatureSet::new(self.dim, &self.method, &self.layer);
        for i in keep {
            out.data.extend_from_slice(self.row(i));
            out.labels.push(self.labels[i]);
        }
        out
    }
}

const LANES: usize = 16;

/// Squared Euclidean distance with a fixed lane-strided summation order.
fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = [0f32; LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..LANES {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut total: f64 = acc.iter().map(|&v| v as f64).sum();
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = (x - y) as f64;
        total += d * d;
    }
    total
}

/// Majority vote among the `k` nearest rows (Euclidean). Candidates are
/// ordered by (distance, label); vote ties go to the smaller summed distance,
/// then the lower class id.
pub fn knn_classify(train: &FeatureSet, query: &[f32], k: usize) -> Result<u16> {
    if train.is_empty() {
        return Err(Error::Empty("k-NN training set is empty".into()));
    }
    if k == 0 || k > train.len() {
        return Err(Error::invalid(format!("k = {k} with {} training rows", train.len())));
    }
    if query.len() != train.dim {
        return Err(Error::shape(format!("query of length {} against {}-dim features", query.len(), train.dim)));
    }
    let key = |a: &(f64, u16), b: &(f64, u16)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let mut best: Vec<(f64, u16)> = Vec::with_capacity(k + 1);
    for i in 0..train.len() {
        let cand = (squared_distance(train.row(i), query), train.labels[i]);
        if best.len() == k && key(&cand, &best[k - 1]).is_ge() {
            continue;
        }
        let pos = best.partition_point(|b| key(b, &cand).is_le());
        best.insert(pos, cand);
        best.truncate(k);
    }
    let mut votes: Vec<(u16, usize, f64)> = Vec::new();
    for &(d2, label) in &best {
        match votes.iter_mut().find(|v| v.0 == label) {
            Some(v) => {
                v.1 += 1;
                v.2 += d2.sqrt();
            }
            None => votes.push((label, 1, d2.sqrt())),
        }
    }
    votes.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)));
    Ok(votes[0].0)
}

/// Percentage of `queries` whose k-NN label matches.
pub fn knn_accuracy(train: &FeatureSet, queries: &FeatureSet, k: usize) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::Empty("no queries".into()));
    }
    let preds = (0..queries.len()).into_par_iter().map(|i| knn_classify(train, queries.row(i), k)).collect::<Result<Vec<_>>>()?;
    let correct = preds.iter().zip(&queries.labels).filter(|(p, l)| p == l).count();
    Ok(100.0 * correct as f64 / queries.len() as f64)
}

/// Raw pixels of every view of `objects`, objects then views in grid order.
pub fn pixel_features(ds: &Dataset, objects: &[usize]) -> FeatureSet {
    let mut set = FeatureSet::new(ds.image_len(), "pixels", "-");
    let n = ds.image_len();
    for &o in objects {
        let obj = &ds.objects[o];
        for cell in obj.pixels.chunks_exact(n) {
            set.data.extend(cell.iter().map(|&p| p as f32 / 255.0));
            set.labels.push(obj.class_id);
        }
    }
    set
}

/// fc1, fc2 and fc3 features (elevation input 0) of every view of `objects`.
pub fn network_features<T: Real>(net: &ShapeCodeNet<T>, method: &str, ds: &Dataset, objects: &[usize]) -> Result<Vec<FeatureSet>> {
    if net.config().image_size != ds.image_size {
        return Err(Error::invalid("network image size does not match the dataset"));
    }
    let h = ds.image_size;
    let per_object = objects
        .par_iter()
        .map(|&o| {
            let views: Vec<T> = ds.objects[o].pixels.iter().map(|&p| T::of(p as f64 / 255.0)).collect();
            let x = crate::ndtensor::Tensor::from_vec(&[ds.spec.num_views(), 1, h, h], views)?;
            net.extract_features(&x)
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureLayer::ALL
        .iter()
        .map(|&layer| {
            let dim = per_object.first().map_or(0, |f| f.layer(layer).item_len());
            let mut set = FeatureSet::new(dim, method, layer.name());
            for (&o, f) in objects.iter().zip(&per_object) {
                let t = f.layer(layer);
                for b in 0..t.batch() {
                    let row: Vec<f32> = t.item(b).iter().map(|v| v.to_f64_lossy() as f32).collect();
                    set.push(&row, ds.objects[o].class_id)?;
                }
            }
            Ok(set)
        })
        .collect()
}

/// Accuracy with a k-NN pool of up to `per_class` rows per class drawn from
/// `pool` under `seed`; every row of `queries` is classified.
pub fn recognition_accuracy(pool: &FeatureSet, queries: &FeatureSet, per_class: usize, k: usize, seed: u64) -> Result<f64> {
    let train = pool.sample_per_class(per_class, seed);
    if train.len() < k {
        return Err(Error::invalid(format!("only {} k-NN training samples for k = {k}", train.len())));
    }
    knn_accuracy(&train, queries, k)
}
