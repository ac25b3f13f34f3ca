//! Reconstruction error over (object, observed view) pairs.

use rayon::prelude::*;

use super::avg::AvgPredictor;
use crate::error::{Error, Result};
use crate::net::{batch_inputs, Example, ShapeCodeNet, Variant};
use crate::scalar::Real;
use crate::shapeforge::{Dataset, Split};
use crate::viewgrid::{mse_metric_x1000, Alignment, ViewIndex};

/// Anything that predicts a full viewgrid from an observed view.
pub trait Reconstructor: Sync {
    fn name(&self) -> String;
    fn alignment(&self) -> Alignment;
    /// `false` if the method cannot be evaluated on objects of this class.
    fn applies_to(&self, ds: &Dataset, class_id: u16) -> bool;
    /// MSE×1000 for every observed view of `object`, in row-major grid order.
    fn object_errors(&self, ds: &Dataset, object: usize) -> Result<Vec<f64>>;
}

impl Reconstructor for AvgPredictor {
    fn name(&self) -> String {
        self.kind.name().to_string()
    }

    fn alignment(&self) -> Alignment {
        Alignment::Canonical
    }

    fn applies_to(&self, _ds: &Dataset, class_id: u16) -> bool {
        AvgPredictor::applies_to(self, class_id)
    }

    fn object_errors(&self, ds: &Dataset, object: usize) -> Result<Vec<f64>> {
        let gt = ds.viewgrid::<f64>(object);
        let pred = self.predict(ds.objects[object].class_id)?;
        ds.spec.indices().map(|v| mse_metric_x1000(&pred, &gt, v, Alignment::Canonical)).collect()
    }
}

/// Views per inference batch when scoring a network.
const EVAL_BATCH: usize = 12;

impl<T: Real> Reconstructor for ShapeCodeNet<T> {
    fn name(&self) -> String {
        self.config().variant.name().to_string()
    }

    fn alignment(&self) -> Alignment {
        self.config().variant.alignment().unwrap_or(Alignment::Relative)
    }

    fn applies_to(&self, _ds: &Dataset, _class_id: u16) -> bool {
        self.config().variant != Variant::Autoencoder
    }

    fn object_errors(&self, ds: &Dataset, object: usize) -> Result<Vec<f64>> {
        let mode = self.config().variant.alignment().ok_or_else(|| Error::invalid("the autoencoder does not predict viewgrids"))?;
        if self.config().spec()? != ds.spec || self.config().image_size != ds.image_size {
            return Err(Error::invalid("network grid or image size does not match the dataset"));
        }
        let gt = ds.viewgrid::<f64>(object);
        let examples: Vec<Example> = ds.spec.indices().map(|view| Example { object, view }).collect();
        let mut out = Vec::with_capacity(examples.len());
        for batch in examples.chunks(EVAL_BATCH) {
            let (x, e) = batch_inputs::<T>(ds, batch)?;
            let y = self.infer(&x, &e)?;
            for (b, ex) in batch.iter().enumerate() {
                let data = y.item(b).iter().map(|v| v.to_f64_lossy()).collect();
                let pred = crate::viewgrid::Viewgrid::new(ds.spec.clone(), ds.image_size, ds.image_size, data)?;
                out.push(mse_metric_x1000(&pred, &gt, ex.view, mode)?);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassScore {
    pub class_id: u16,
    pub mse_x1000: f64,
    /// (object, observed view) pairs.
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconResult {
    pub method: String,
    pub split: Split,
    pub overall: f64,
    pub pairs: usize,
    pub per_class: Vec<ClassScore>,
}

/// Mean MSE×1000 over every (object, observed view) pair of `split`, overall
/// and per class. `None` when the method does not apply to the split's
/// classes (class-conditional baselines on unseen classes).
pub fn evaluate_reconstruction(rec: &dyn Reconstructor, ds: &Dataset, split: Split) -> Result<Option<ReconResult>> {
    let objects = ds.indices(split);
    if objects.is_empty() {
        return Err(Error::Empty(format!("split {} is empty", split.name())));
    }
    if objects.iter().any(|&o| !rec.applies_to(ds, ds.objects[o].class_id)) {
        return Ok(None);
    }
    let errors = objects.par_iter().map(|&o| rec.object_errors(ds, o)).collect::<Result<Vec<_>>>()?;
    let mut per_class: Vec<(u16, f64, usize)> = Vec::new();
    let (mut total, mut pairs) = (0.0, 0usize);
    for (&o, errs) in objects.iter().zip(&errors) {
        let c = ds.objects[o].class_id;
        let slot = match per_class.iter().position(|p| p.0 == c) {
            Some(i) => i,
            None => {
                per_class.push((c, 0.0, 0));
                per_class.len() - 1
            }
        };
        for &e in errs {
            total += e;
            pairs += 1;
            per_class[slot].1 += e;
            per_class[slot].2 += 1;
        }
    }
    per_class.sort_by_key(|p| p.0);
    Ok(Some(ReconResult {
        method: rec.name(),
        split,
        overall: total / pairs as f64,
        pairs,
        per_class: per_class.into_iter().map(|(class_id, s, n)| ClassScore { class_id, mse_x1000: s / n as f64, pairs: n }).collect(),
    }))
}

/// Mean MSE×1000 per observed cell over `objects`: an `N×M` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn get(&self, idx: ViewIndex) -> f64 {
        self.values[idx.elev_row * self.cols + idx.azim_col]
    }

    /// Tab-separated matrix, one elevation row per line.
    pub fn to_text(&self) -> String {
        self.values.chunks(self.cols).map(|r| r.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join("\t") + "\n").collect()
    }

    /// Grey-level image, `cell` pixels per entry, scaled so the maximum is white.
    pub fn to_image(&self, cell: usize) -> crate::viewgrid::GrayImage {
        let max = self.values.iter().copied().fold(0.0, f64::max);
        let mut img = crate::viewgrid::GrayImage::new(self.cols * cell, self.rows * cell, 0);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = if max > 0.0 { crate::viewgrid::quantize(self.values[r * self.cols + c] / max) } else { 0 };
                for y in r * cell..(r + 1) * cell {
                    for x in c * cell..(c + 1) * cell {
                        img.set(x, y, v);
                    }
                }
            }
        }
        img
    }
}

pub fn per_view_mse_heatmap(rec: &dyn Reconstructor, ds: &Dataset, objects: &[usize]) -> Result<Heatmap> {
    if objects.is_empty() {
        return Err(Error::Empty("heatmap needs at least one instance".into()));
    }
    let errors = objects.par_iter().map(|&o| rec.object_errors(ds, o)).collect::<Result<Vec<_>>>()?;
    let mut values = vec![0.0; ds.spec.num_views()];
    for errs in &errors {
        for (v, e) in values.iter_mut().zip(errs) {
            *v += e;
        }
    }
    values.iter_mut().for_each(|v| *v /= objects.len() as f64);
    Ok(Heatmap { rows: ds.spec.num_elevations(), cols: ds.spec.num_azimuths(), values })
}
