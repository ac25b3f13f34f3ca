use super::{ViewIndex, ViewSphereSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// An object's `N × M` array of `H × W` grayscale views, row-major
/// `[elevation][azimuth][row][col]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Viewgrid<T> {
    spec: ViewSphereSpec,
    height: usize,
    width: usize,
    data: Vec<T>,
    pub class_id: Option<u16>,
}

impl<T: Real> Viewgrid<T> {
    pub fn new(spec: ViewSphereSpec, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("viewgrid images must be non-empty"));
        }
        let want = spec.num_views() * height * width;
        if data.len() != want {
            return Err(Error::shape(format!("viewgrid needs {want} values, got {}", data.len())));
        }
        Ok(Viewgrid { spec, height, width, data, class_id: None })
    }

    pub fn zeros(spec: ViewSphereSpec, height: usize, width: usize) -> Self {
        let len = spec.num_views() * height * width;
        Viewgrid { spec, height, width, data: vec![T::zero(); len], class_id: None }
    }

    pub fn with_class(mut self, class_id: u16) -> Self {
        self.class_id = Some(class_id);
        self
    }

    pub fn spec(&self) -> &ViewSphereSpec {
        &self.spec
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn image_len(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn cell(&self, idx: ViewIndex) -> &[T] {
        let n = self.image_len();
        let f = idx.flat(&self.spec);
        &self.data[f * n..(f + 1) * n]
    }

    pub fn cell_mut(&mut self, idx: ViewIndex) -> &mut [T] {
        let n = self.image_len();
        let f = idx.flat(&self.spec);
        &mut self.data[f * n..(f + 1) * n]
    }

    /// True when both grids share the sampling grid and image size.
    pub fn compatible(&self, other: &Viewgrid<impl Real>) -> bool {
        self.spec == other.spec && self.height == other.height && self.width == other.width
    }

    pub fn ensure_compatible(&self, other: &Viewgrid<impl Real>) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "viewgrid {}x{} of {}x{} vs {}x{} of {}x{}",
                self.spec.num_elevations(),
                self.spec.num_azimuths(),
                self.height,
                self.width,
                other.spec.num_elevations(),
                other.spec.num_azimuths(),
                other.height,
                other.width
            )))
        }
    }

    /// All values lie in `[0, 1]`.
    pub fn in_unit_range(&self) -> bool {
        self.data.iter().all(|&v| v >= T::zero() && v <= T::one())
    }

    pub fn cast<U: Real>(&self) -> Viewgrid<U> {
        Viewgrid {
            spec: self.spec.clone(),
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
            class_id: self.class_id,
        }
    }
}

/// Copies `src` into `dst` with column `j` of `dst` taken from column
/// `(j + k) mod cols` of `src`. Both are `[rows][cols][cell]`.
pub fn shift_columns_into<T: Copy>(src: &[T], rows: usize, cols: usize, cell: usize, k: i64, dst: &mut [T]) {
    assert_eq!(src.len(), rows * cols * cell);
    assert_eq!(dst.len(), src.len());
    let shift = k.rem_euclid(cols as i64) as usize;
    for r in 0..rows {
        for j in 0..cols {
            let from = (r * cols + (j + shift) % cols) * cell;
            let to = (r * cols + j) * cell;
            dst[to..to + cell].copy_from_slice(&src[from..from + cell]);
        }
    }
}

/// Circular column shift: output column `j` is input column `(j + k) mod M`.
pub fn azimuth_shift<T: Real>(vg: &Viewgrid<T>, k: i64) -> Viewgrid<T> {
    let mut out = vg.clone();
    shift_columns_into(&vg.data, vg.spec.num_elevations(), vg.spec.num_azimuths(), vg.image_len(), k, &mut out.data);
    out
}

/// Re-indexes `gt` so the observed view sits at azimuth column 0 of its row.
pub fn align_target<T: Real>(gt: &Viewgrid<T>, observed: ViewIndex) -> Result<Viewgrid<T>> {
    gt.spec.check(observed)?;
    Ok(azimuth_shift(gt, observed.azim_col as i64))
}
