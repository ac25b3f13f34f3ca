use crate::error::{Error, Result};

/// The sampling grid: `M` evenly spaced azimuths × an explicit elevation list.
///
/// Rows are elevations in increasing order; columns are azimuths
/// `0, 360/M, …, 360 − 360/M` degrees.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ViewSphereSpec {
    azimuths: usize,
    elevations: Vec<i16>,
}

/// Builds a [`ViewSphereSpec`]; elevations may be given in any order.
pub fn sample_view_sphere(azimuths: usize, elevations: &[i16]) -> Result<ViewSphereSpec> {
    if azimuths == 0 {
        return Err(Error::invalid("need at least one azimuth"));
    }
    if azimuths > u16::MAX as usize {
        return Err(Error::invalid("too many azimuths"));
    }
    if elevations.is_empty() {
        return Err(Error::invalid("need at least one elevation"));
    }
    let mut sorted = elevations.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("duplicate elevation {}", w[0])));
    }
    if let Some(e) = sorted.iter().find(|e| !(-90..=90).contains(*e)) {
        return Err(Error::invalid(format!("elevation {e} outside [-90, 90]")));
    }
    Ok(ViewSphereSpec { azimuths, elevations: sorted })
}

impl ViewSphereSpec {
    /// The 7×12 grid: 12 azimuths, elevations 0, ±30, ±60, ±90.
    pub fn modelnet() -> Self {
        sample_view_sphere(12, &[-90, -60, -30, 0, 30, 60, 90]).expect("static grid")
    }

    /// The 5×8 grid: 8 azimuths, elevations 0, ±30, ±60.
    pub fn shapenet() -> Self {
        sample_view_sphere(8, &[-60, -30, 0, 30, 60]).expect("static grid")
    }

    /// `M`.
    pub fn num_azimuths(&self) -> usize {
        self.azimuths
    }

    /// `N`.
    pub fn num_elevations(&self) -> usize {
        self.elevations.len()
    }

    pub fn num_views(&self) -> usize {
        self.azimuths * self.elevations.len()
    }

    pub fn elevations(&self) -> &[i16] {
        &self.elevations
    }

    pub fn azimuth_degrees(&self, col: usize) -> f64 {
        col as f64 * 360.0 / self.azimuths as f64
    }

    pub fn azimuths_degrees(&self) -> Vec<f64> {
        (0..self.azimuths).map(|c| self.azimuth_degrees(c)).collect()
    }

    pub fn elevation_degrees(&self, row: usize) -> f64 {
        self.elevations[row] as f64
    }

    /// Row-major `(elevation row, azimuth column)` positions.
    pub fn indices(&self) -> impl Iterator<Item = ViewIndex> + '_ {
        (0..self.num_elevations()).flat_map(move |r| (0..self.azimuths).map(move |c| ViewIndex::new(r, c)))
    }

    pub fn index(&self, flat: usize) -> ViewIndex {
        ViewIndex::new(flat / self.azimuths, flat % self.azimuths)
    }

    pub fn check(&self, idx: ViewIndex) -> Result<()> {
        if idx.elev_row < self.num_elevations() && idx.azim_col < self.azimuths {
            Ok(())
        } else {
            Err(Error::invalid(format!("view {idx:?} outside {}x{} grid", self.num_elevations(), self.azimuths)))
        }
    }
}

/// A position in the grid: `(elevation row, azimuth column)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ViewIndex {
    pub elev_row: usize,
    pub azim_col: usize,
}

impl ViewIndex {
    pub const fn new(elev_row: usize, azim_col: usize) -> Self {
        ViewIndex { elev_row, azim_col }
    }

    pub fn flat(&self, spec: &ViewSphereSpec) -> usize {
        self.elev_row * spec.num_azimuths() + self.azim_col
    }
}
