//! Orthographic sphere-tracing renderer with Lambertian shading.

use rayon::prelude::*;

use super::sdf::{Solid, Vec3};
use crate::viewgrid::{ViewSphereSpec, Viewgrid};

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    if r == 0.0 {
        (0.0, 1.0)
    } else if r == 90.0 {
        (1.0, 0.0)
    } else if r == 180.0 {
        (0.0, -1.0)
    } else if r == 270.0 {
        (-1.0, 0.0)
    } else {
        r.to_radians().sin_cos()
    }
}

/// Camera on the viewing sphere, looking at the origin.
///
/// With elevation `e` and azimuth `a` the camera sits in direction
/// `d = (cos e·sin a, sin e, cos e·cos a)`; the image x axis is
/// `right = (cos a, 0, −sin a)` and the image y axis is
/// `up = (−sin e·sin a, cos e, −sin e·cos a)`. The basis stays defined at the
/// poles, where `up` follows the azimuth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    pub elevation: f64,
    pub azimuth: f64,
}

impl CameraPose {
    pub fn new(elevation: f64, azimuth: f64) -> Self {
        CameraPose { elevation, azimuth }
    }

    /// `(toward camera, right, up)`.
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let (se, ce) = sin_cos_deg(self.elevation);
        let (sa, ca) = sin_cos_deg(self.azimuth);
        ([ce * sa, se, ce * ca], [ca, 0.0, -sa], [-se * sa, ce, -se * ca])
    }
}

/// Rendering parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderConfig {
    /// Square image side.
    pub image_size: usize,
    /// Half-width of the orthographic window in world units.
    pub ortho_window: f64,
    /// Unit vector toward the light, world frame.
    pub light_direction: Vec3,
    pub ambient: f64,
    pub diffuse: f64,
    pub background: f64,
    pub max_steps: u32,
    pub hit_threshold: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        let k = 1.0 / 3f64.sqrt();
        RenderConfig {
            image_size: 32,
            ortho_window: 1.2,
            light_direction: [k, k, k],
            ambient: 0.2,
            diffuse: 0.8,
            background: 0.0,
            max_steps: 128,
            hit_threshold: 1e-3,
        }
    }
}

impl RenderConfig {
    /// Light straight down the vertical axis, so shading is invariant to azimuth.
    pub fn overhead_light(mut self) -> Self {
        self.light_direction = [0.0, 1.0, 0.0];
        self
    }
}

const NORMAL_EPS: f64 = 1e-4;

fn add(a: Vec3, b: Vec3, s: f64) -> Vec3 {
    [a[0] + b[0] * s, a[1] + b[1] * s, a[2] + b[2] * s]
}

fn normal(solid: &Solid, p: Vec3) -> Vec3 {
    let e = NORMAL_EPS;
    let g = [
        solid.distance([p[0] + e, p[1], p[2]]) - solid.distance([p[0] - e, p[1], p[2]]),
        solid.distance([p[0], p[1] + e, p[2]]) - solid.distance([p[0], p[1] - e, p[2]]),
        solid.distance([p[0], p[1], p[2] + e]) - solid.distance([p[0], p[1], p[2] - e]),
    ];
    let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    if n == 0.0 {
        [0.0; 3]
    } else {
        [g[0] / n, g[1] / n, g[2] / n]
    }
}

/// Marches the ray entering the unit sphere at `start` along `dir` for at most
/// `span`; returns the hit point.
fn trace(solid: &Solid, start: Vec3, dir: Vec3, span: f64, cfg: &RenderConfig) -> Option<Vec3> {
    let mut s = 0.0;
    for _ in 0..cfg.max_steps {
        let p = add(start, dir, s);
        let d = solid.distance(p);
        if d < cfg.hit_threshold {
            return Some(p);
        }
        s += d;
        if s > span {
            return None;
        }
    }
    None
}

/// Renders one `image_size²` view into `out` (row-major, top row first).
pub fn render_view_into(solid: &Solid, pose: CameraPose, cfg: &RenderConfig, out: &mut [f64]) {
    let n = cfg.image_size;
    assert_eq!(out.len(), n * n);
    let (toward, right, up) = pose.basis();
    let dir = [-toward[0], -toward[1], -toward[2]];
    let l = cfg.light_direction;
    for row in 0..n {
        let v = (1.0 - (2 * row + 1) as f64 / n as f64) * cfg.ortho_window;
        for col in 0..n {
            let u = (-1.0 + (2 * col + 1) as f64 / n as f64) * cfg.ortho_window;
            let rho2 = u * u + v * v;
            let px = &mut out[row * n + col];
            *px = cfg.background;
            // every shape lies inside the unit sphere
            if rho2 >= 1.0 {
                continue;
            }
            let depth = (1.0 - rho2).sqrt();
            let start = add(add(add([0.0; 3], right, u), up, v), toward, depth);
            if let Some(hit) = trace(solid, start, dir, 2.0 * depth, cfg) {
                let nrm = normal(solid, hit);
                let lambert = (nrm[0] * l[0] + nrm[1] * l[1] + nrm[2] * l[2]).max(0.0);
                *px = (cfg.ambient + cfg.diffuse * lambert).clamp(0.0, 1.0);
            }
        }
    }
}

/// One grayscale view in `[0, 1]`.
pub fn render_view(solid: &Solid, pose: CameraPose, cfg: &RenderConfig) -> Vec<f64> {
    let mut out = vec![0.0; cfg.image_size * cfg.image_size];
    render_view_into(solid, pose, cfg, &mut out);
    out
}

/// All `N × M` views, row-major; each view renders into its own slot.
pub fn render_viewgrid(solid: &Solid, spec: &ViewSphereSpec, cfg: &RenderConfig) -> Viewgrid<f64> {
    let n = cfg.image_size;
    let mut vg = Viewgrid::zeros(spec.clone(), n, n);
    vg.data_mut().par_chunks_mut(n * n).enumerate().for_each(|(flat, slot)| {
        let idx = spec.index(flat);
        let pose = CameraPose::new(spec.elevation_degrees(idx.elev_row), spec.azimuth_degrees(idx.azim_col));
        render_view_into(solid, pose, cfg, slot);
    });
    vg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapeforge::sdf::{Family, Primitive, ShapeSpec};
    use crate::viewgrid::{sample_view_sphere, ViewIndex};

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn basis_is_orthonormal_and_right_handed() {
        for (e, a) in [(0.0, 0.0), (30.0, 45.0), (90.0, 120.0), (-90.0, 300.0), (-60.0, 30.0)] {
            let (d, r, u) = CameraPose::new(e, a).basis();
            let dot = |x: Vec3, y: Vec3| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
            assert!((dot(d, d) - 1.0).abs() < 1e-12 && (dot(r, r) - 1.0).abs() < 1e-12 && (dot(u, u) - 1.0).abs() < 1e-12);
            assert!(dot(d, r).abs() < 1e-12 && dot(d, u).abs() < 1e-12 && dot(r, u).abs() < 1e-12);
            let cross = [r[1] * u[2] - r[2] * u[1], r[2] * u[0] - r[0] * u[2], r[0] * u[1] - r[1] * u[0]];
            assert!(max_diff(&cross, &d) < 1e-12);
        }
    }

    #[test]
    fn empty_scene_is_background() {
        let img = render_view(&Solid::empty(), CameraPose::new(30.0, 60.0), &RenderConfig::default());
        assert!(img.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sphere_looks_the_same_from_every_azimuth() {
        let sphere = Solid::raw(vec![Primitive::Ellipsoid { center: [0.0; 3], radii: [0.8; 3] }]);
        let cfg = RenderConfig::default().overhead_light();
        let base = render_view(&sphere, CameraPose::new(0.0, 0.0), &cfg);
        assert!(base.iter().any(|&v| v > 0.0));
        for k in 1..12 {
            let img = render_view(&sphere, CameraPose::new(0.0, k as f64 * 30.0), &cfg);
            assert!(max_diff(&img, &base) < 1e-9, "azimuth {}", k * 30);
        }
        let spec = sample_view_sphere(12, &[-60, 0, 30]).unwrap();
        let vg = render_viewgrid(&sphere, &spec, &cfg);
        for row in 0..3 {
            for col in 1..12 {
                assert!(max_diff(vg.cell(ViewIndex::new(row, col)), vg.cell(ViewIndex::new(row, 0))) < 1e-9);
            }
        }
    }

    #[test]
    fn azimuth_is_periodic() {
        let solid = ShapeSpec::sample(Family::Chair, &mut crate::rng::stream(3, crate::rng::Stream::Aux, 0), 0).solid();
        let cfg = RenderConfig::default();
        for a in [0.0, 30.0, 75.0] {
            let x = render_view(&solid, CameraPose::new(30.0, a), &cfg);
            let y = render_view(&solid, CameraPose::new(30.0, a + 360.0), &cfg);
            assert_eq!(x, y);
        }
    }

    #[test]
    fn unit_cube_silhouette_matches_projection() {
        // cube of edge 1; normalisation scales its corner radius sqrt(3)/2 to 0.95
        let cube = ShapeSpec::new(Family::Box, vec![0.5, 0.5, 0.5]).solid();
        let cfg = RenderConfig::default();
        let img = render_view(&cube, CameraPose::new(0.0, 0.0), &cfg);
        let half = 0.5 * 0.95 / (3f64.sqrt() / 2.0);
        let n = cfg.image_size;
        // independent oracle: pixel centre (u, v) lies in the projected square
        let centre = |i: usize| (-1.0 + (2 * i + 1) as f64 / n as f64) * cfg.ortho_window;
        let inside: Vec<usize> = (0..n).filter(|&i| centre(i).abs() < half).collect();
        assert_eq!((inside[0], *inside.last().unwrap()), (9, 22));
        let lit = cfg.ambient + cfg.diffuse / 3f64.sqrt();
        for row in 0..n {
            for col in 0..n {
                let want_in = centre(col).abs() < half && centre(n - 1 - row).abs() < half;
                let v = img[row * n + col];
                if want_in {
                    assert!((v - lit).abs() < 1e-6, "({row},{col}) = {v}");
                } else {
                    assert_eq!(v, 0.0, "({row},{col})");
                }
            }
        }
    }

    #[test]
    fn cross_has_quarter_turn_symmetry() {
        let cross = ShapeSpec::sample(Family::Cross, &mut crate::rng::stream(4, crate::rng::Stream::Aux, 0), 0).solid();
        let cfg = RenderConfig::default().overhead_light();
        let spec = sample_view_sphere(8, &[-30, 0, 30]).unwrap();
        let vg = render_viewgrid(&cross, &spec, &cfg);
        for row in 0..3 {
            for col in 0..8 {
                let a = vg.cell(ViewIndex::new(row, col));
                let b = vg.cell(ViewIndex::new(row, (col + 2) % 8));
                assert!(max_diff(a, b) < 1e-9, "row {row} col {col}");
            }
        }
        // and is not trivially constant across a 45° step
        assert!(max_diff(vg.cell(ViewIndex::new(1, 0)), vg.cell(ViewIndex::new(1, 1))) > 0.1);
    }

    #[test]
    fn grid_cells_equal_single_renders_and_stay_in_range() {
        let solid = ShapeSpec::sample(Family::Table, &mut crate::rng::stream(8, crate::rng::Stream::Aux, 0), 0).solid();
        let cfg = RenderConfig::default();
        let spec = ViewSphereSpec::modelnet();
        let vg = render_viewgrid(&solid, &spec, &cfg);
        assert!(vg.in_unit_range());
        for idx in spec.indices() {
            let single = render_view(&solid, CameraPose::new(spec.elevation_degrees(idx.elev_row), spec.azimuth_degrees(idx.azim_col)), &cfg);
            assert_eq!(vg.cell(idx), &single[..]);
        }
    }
}
