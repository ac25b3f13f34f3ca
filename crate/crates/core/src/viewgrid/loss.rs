//! Viewgrid regression losses and the MSE×1000 reconstruction metric.
//!
//! Losses are per-pixel means; squared errors are accumulated in output
//! order (cell, row, column).

use super::{align_target, azimuth_shift, ViewIndex, Viewgrid};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which axes the target viewgrid is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Alignment {
    /// Observed view at azimuth column 0.
    Relative,
    /// The dataset's own axes.
    Canonical,
}

impl Alignment {
    pub fn name(&self) -> &'static str {
        match self {
            Alignment::Relative => "relative",
            Alignment::Canonical => "canonical",
        }
    }
}

/// Target viewgrid for a prediction made from `observed` under `mode`.
pub fn aligned<T: Real>(gt: &Viewgrid<T>, observed: ViewIndex, mode: Alignment) -> Result<Viewgrid<T>> {
    match mode {
        Alignment::Relative => align_target(gt, observed),
        Alignment::Canonical => {
            gt.spec().check(observed)?;
            Ok(gt.clone())
        }
    }
}

fn squared_error_sum<T: Real>(pred: &[T], target: &[T]) -> T {
    let mut acc = T::zero();
    for (&p, &t) in pred.iter().zip(target) {
        let d = p - t;
        acc += d * d;
    }
    acc
}

/// Per-pixel mean squared error against the azimuth-aligned target.
pub fn viewgrid_loss<T: Real>(pred: &Viewgrid<T>, gt: &Viewgrid<T>, observed: ViewIndex) -> Result<T> {
    pred.ensure_compatible(gt)?;
    let target = align_target(gt, observed)?;
    Ok(squared_error_sum(pred.data(), target.data()) / T::of(pred.data().len() as f64))
}

/// Per-pixel mean squared error against the canonically aligned target.
pub fn ca_loss<T: Real>(pred: &Viewgrid<T>, gt: &Viewgrid<T>) -> Result<T> {
    pred.ensure_compatible(gt)?;
    Ok(squared_error_sum(pred.data(), gt.data()) / T::of(pred.data().len() as f64))
}

/// Loss under either alignment.
pub fn alignment_loss<T: Real>(pred: &Viewgrid<T>, gt: &Viewgrid<T>, observed: ViewIndex, mode: Alignment) -> Result<T> {
    match mode {
        Alignment::Relative => viewgrid_loss(pred, gt, observed),
        Alignment::Canonical => {
            gt.spec().check(observed)?;
            ca_loss(pred, gt)
        }
    }
}

/// Loss with missing ground-truth cells. `available[f]` flags cell `f` of
/// `gt` (row-major, canonical axes). Masked cells contribute nothing and the
/// mean divides by the unmasked pixel count. Returns `(loss, d loss / d pred)`.
pub fn masked_loss<T: Real>(
    pred: &Viewgrid<T>,
    gt: &Viewgrid<T>,
    observed: ViewIndex,
    mode: Alignment,
    available: &[bool],
) -> Result<(T, Vec<T>)> {
    pred.ensure_compatible(gt)?;
    let spec = gt.spec();
    if available.len() != spec.num_views() {
        return Err(Error::shape(format!("mask has {} cells, grid has {}", available.len(), spec.num_views())));
    }
    let shift = match mode {
        Alignment::Relative => observed.azim_col,
        Alignment::Canonical => 0,
    };
    spec.check(observed)?;
    let target = azimuth_shift(gt, shift as i64);
    let m = spec.num_azimuths();
    let n = pred.image_len();
    let kept: usize = (0..spec.num_views()).filter(|&f| available[(f / m) * m + (f % m + shift) % m]).count();
    if kept == 0 {
        return Err(Error::Empty("every ground-truth view is masked".into()));
    }
    let count = T::of((kept * n) as f64);
    let mut acc = T::zero();
    let mut grad = vec![T::zero(); pred.data().len()];
    for f in 0..spec.num_views() {
        if !available[(f / m) * m + (f % m + shift) % m] {
            continue;
        }
        let p = &pred.data()[f * n..(f + 1) * n];
        let t = &target.data()[f * n..(f + 1) * n];
        for ((g, &pv), &tv) in grad[f * n..(f + 1) * n].iter_mut().zip(p).zip(t) {
            let d = pv - tv;
            acc += d * d;
            *g = T::of(2.0) * d / count;
        }
    }
    Ok((acc / count, grad))
}

/// `1000 ×` per-pixel MSE, computed in `f64`.
pub fn mse_metric_x1000<T: Real>(pred: &Viewgrid<T>, gt: &Viewgrid<T>, observed: ViewIndex, mode: Alignment) -> Result<f64> {
    let p = pred.cast::<f64>();
    let g = gt.cast::<f64>();
    Ok(1000.0 * alignment_loss(&p, &g, observed, mode)?)
}
