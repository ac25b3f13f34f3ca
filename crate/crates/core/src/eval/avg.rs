//! Average-image and average-viewgrid reconstruction baselines.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::shapeforge::Dataset;
use crate::viewgrid::{ViewSphereSpec, Viewgrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AvgKind {
    /// Grand mean image, replicated at every cell.
    AvgView,
    /// Per-cell mean viewgrid (uses the canonical axes).
    AvgViewgrid,
    /// [`AvgKind::AvgView`] per ground-truth class.
    ClassAvgView,
    /// [`AvgKind::AvgViewgrid`] per ground-truth class.
    ClassAvgViewgrid,
}

impl AvgKind {
    pub const ALL: [AvgKind; 4] = [AvgKind::AvgView, AvgKind::AvgViewgrid, AvgKind::ClassAvgView, AvgKind::ClassAvgViewgrid];

    pub fn name(&self) -> &'static str {
        match self {
            AvgKind::AvgView => "avg_view",
            AvgKind::AvgViewgrid => "avg_viewgrid",
            AvgKind::ClassAvgView => "class_avg_view",
            AvgKind::ClassAvgViewgrid => "class_avg_viewgrid",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        AvgKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::invalid(format!("unknown baseline '{s}'")))
    }

    pub fn per_class(&self) -> bool {
        matches!(self, AvgKind::ClassAvgView | AvgKind::ClassAvgViewgrid)
    }

    fn per_cell(&self) -> bool {
        matches!(self, AvgKind::AvgViewgrid | AvgKind::ClassAvgViewgrid)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AvgPredictor {
    pub kind: AvgKind,
    spec: ViewSphereSpec,
    image_size: usize,
    /// Keyed by class for per-class kinds, `None` otherwise. Values are a mean
    /// image (`H·W`) or a mean viewgrid (`N·M·H·W`).
    means: BTreeMap<Option<u16>, Vec<f64>>,
}

/// Fits `kind` on `objects` (normally the training split). Sums run in
/// object order, view order, pixel order, then divide once.
pub fn fit_avg_predictor(ds: &Dataset, objects: &[usize], kind: AvgKind) -> Result<AvgPredictor> {
    if objects.is_empty() {
        return Err(Error::Empty("cannot fit an average predictor on an empty split".into()));
    }
    let n = ds.image_len();
    let views = ds.spec.num_views();
    let len = if kind.per_cell() { views * n } else { n };
    let mut sums: BTreeMap<Option<u16>, (Vec<f64>, usize)> = BTreeMap::new();
    for &o in objects {
        let obj = &ds.objects[o];
        let key = kind.per_class().then_some(obj.class_id);
        let (sum, count) = sums.entry(key).or_insert_with(|| (vec![0.0; len], 0));
        if kind.per_cell() {
            for (s, &p) in sum.iter_mut().zip(&obj.pixels) {
                *s += p as f64 / 255.0;
            }
            *count += 1;
        } else {
            for cell in obj.pixels.chunks_exact(n) {
                for (s, &p) in sum.iter_mut().zip(cell) {
                    *s += p as f64 / 255.0;
                }
            }
            *count += views;
        }
    }
    let means = sums.into_iter().map(|(k, (s, c))| (k, s.into_iter().map(|v| v / c as f64).collect())).collect();
    Ok(AvgPredictor { kind, spec: ds.spec.clone(), image_size: ds.image_size, means })
}

impl AvgPredictor {
    /// Classes the predictor has a mean for (`None` for class-agnostic kinds).
    pub fn classes(&self) -> Vec<Option<u16>> {
        self.means.keys().copied().collect()
    }

    pub fn applies_to(&self, class_id: u16) -> bool {
        !self.kind.per_class() || self.means.contains_key(&Some(class_id))
    }

    /// Prediction for an object of `class_id`, in canonical axes.
    pub fn predict(&self, class_id: u16) -> Result<Viewgrid<f64>> {
        let key = self.kind.per_class().then_some(class_id);
        let mean = self.means.get(&key).ok_or_else(|| Error::invalid(format!("{} has no mean for class {class_id}", self.kind.name())))?;
        let data = if self.kind.per_cell() { mean.clone() } else { mean.repeat(self.spec.num_views()) };
        Viewgrid::new(self.spec.clone(), self.image_size, self.image_size, data)
    }
}
