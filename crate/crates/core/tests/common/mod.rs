#![allow(dead_code)]

use shapecodes::shapeforge::{generate_dataset, Dataset, DatasetConfig, RenderConfig};
use shapecodes::viewgrid::{sample_view_sphere, ViewIndex};

/// 4 classes (one unseen) × `per_class` instances, 3×4 grid of 8×8 views.
pub fn tiny_dataset(per_class: usize, seed: u64) -> Dataset {
    let config = DatasetConfig::first(4, 1, per_class).unwrap();
    let spec = sample_view_sphere(4, &[-30, 0, 30]).unwrap();
    let render = RenderConfig { image_size: 8, ..RenderConfig::default() };
    generate_dataset(&config, &spec, &render, seed).unwrap()
}

/// Pixel `p` of cell `(r, c)` of object `o`, as read back from storage.
pub fn pixel(ds: &Dataset, o: usize, r: usize, c: usize, p: usize) -> f64 {
    let m = ds.spec.num_azimuths();
    ds.objects[o].pixels[(r * m + c) * ds.image_len() + p] as f64 / 255.0
}

/// Per-pixel MSE×1000 of a full prediction `pred[r][c][p]` against object
/// `o`, with prediction column `c` compared to ground-truth column `c + shift`.
pub fn brute_mse(ds: &Dataset, o: usize, pred: &dyn Fn(usize, usize, usize) -> f64, shift: usize) -> f64 {
    let (n, m, len) = (ds.spec.num_elevations(), ds.spec.num_azimuths(), ds.image_len());
    let mut sum = 0.0;
    for r in 0..n {
        for c in 0..m {
            for p in 0..len {
                let d = pred(r, c, p) - pixel(ds, o, r, (c + shift) % m, p);
                sum += d * d;
            }
        }
    }
    1000.0 * sum / (n * m * len) as f64
}

pub fn views(ds: &Dataset) -> Vec<ViewIndex> {
    ds.spec.indices().collect()
}
