//! Parametric shape families as unions of signed-distance primitives.
//!
//! Coordinates are y-up. Every shape is centred on its bounding box and
//! uniformly scaled so a conservative bounding sphere has radius
//! [`NORMALIZED_RADIUS`].

use rand::Rng;

pub type Vec3 = [f64; 3];

/// Radius of the bounding sphere after normalisation.
pub const NORMALIZED_RADIUS: f64 = 0.95;

fn len2(x: f64, y: f64) -> f64 {
    (x * x + y * y).sqrt()
}

fn len3(p: Vec3) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// A primitive solid centred at `center`.
#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    /// Axis-aligned box with half extents.
    Box { center: Vec3, half: Vec3 },
    /// Vertical cylinder.
    Cylinder { center: Vec3, radius: f64, half_height: f64 },
    /// Vertical cone, base radius at the bottom, apex on top.
    Cone { center: Vec3, radius: f64, height: f64 },
    Ellipsoid { center: Vec3, radii: Vec3 },
    /// Capsule along the x axis.
    Capsule { center: Vec3, half_length: f64, radius: f64 },
    /// Ring lying in the xz plane.
    Torus { center: Vec3, major: f64, minor: f64 },
}

impl Primitive {
    fn center(&self) -> Vec3 {
        match self {
            Primitive::Box { center, .. }
            | Primitive::Cylinder { center, .. }
            | Primitive::Cone { center, .. }
            | Primitive::Ellipsoid { center, .. }
            | Primitive::Capsule { center, .. }
            | Primitive::Torus { center, .. } => *center,
        }
    }

    fn center_mut(&mut self) -> &mut Vec3 {
        match self {
            Primitive::Box { center, .. }
            | Primitive::Cylinder { center, .. }
            | Primitive::Cone { center, .. }
            | Primitive::Ellipsoid { center, .. }
            | Primitive::Capsule { center, .. }
            | Primitive::Torus { center, .. } => center,
        }
    }

    /// Half extents of the axis-aligned bounding box around the centre.
    fn half_extents(&self) -> Vec3 {
        match *self {
            Primitive::Box { half, .. } => half,
            Primitive::Cylinder { radius, half_height, .. } => [radius, half_height, radius],
            Primitive::Cone { radius, height, .. } => [radius, height / 2.0, radius],
            Primitive::Ellipsoid { radii, .. } => radii,
            Primitive::Capsule { half_length, radius, .. } => [half_length + radius, radius, radius],
            Primitive::Torus { major, minor, .. } => [major + minor, minor, major + minor],
        }
    }

    /// Conservative distance from the origin to the farthest surface point.
    fn bounding_radius(&self) -> f64 {
        let c = self.center();
        match *self {
            Primitive::Box { half, .. } => len3([c[0].abs() + half[0], c[1].abs() + half[1], c[2].abs() + half[2]]),
            Primitive::Cylinder { radius, half_height, .. } => len2(len2(c[0], c[2]) + radius, c[1].abs() + half_height),
            Primitive::Cone { radius, height, .. } => len2(len2(c[0], c[2]) + radius, c[1].abs() + height / 2.0),
            Primitive::Ellipsoid { radii, .. } => len3(c) + radii[0].max(radii[1]).max(radii[2]),
            Primitive::Capsule { half_length, radius, .. } => len3(c) + half_length + radius,
            Primitive::Torus { major, minor, .. } => len2(len2(c[0], c[2]) + major + minor, c[1].abs() + minor),
        }
    }

    /// Signed distance (a lower bound for the ellipsoid).
    pub fn distance(&self, p: Vec3) -> f64 {
        let c = self.center();
        let q = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
        match *self {
            Primitive::Box { half, .. } => {
                let d = [q[0].abs() - half[0], q[1].abs() - half[1], q[2].abs() - half[2]];
                let outside = len3([d[0].max(0.0), d[1].max(0.0), d[2].max(0.0)]);
                outside + d[0].max(d[1]).max(d[2]).min(0.0)
            }
            Primitive::Cylinder { radius, half_height, .. } => {
                let dx = len2(q[0], q[2]) - radius;
                let dy = q[1].abs() - half_height;
                dx.max(dy).min(0.0) + len2(dx.max(0.0), dy.max(0.0))
            }
            Primitive::Cone { radius, height, .. } => {
                // capped cone: bottom radius `radius` at y = -h/2, apex at y = +h/2
                let h = height / 2.0;
                let (r1, r2) = (radius, 0.0);
                let qx = len2(q[0], q[2]);
                let qy = q[1];
                let k1 = (r2, h);
                let k2 = (r2 - r1, 2.0 * h);
                let ca = (qx - qx.min(if qy < 0.0 { r1 } else { r2 }), qy.abs() - h);
                let k2dot = k2.0 * k2.0 + k2.1 * k2.1;
                let t = (((k1.0 - qx) * k2.0 + (k1.1 - qy) * k2.1) / k2dot).clamp(0.0, 1.0);
                let cb = (qx - k1.0 + k2.0 * t, qy - k1.1 + k2.1 * t);
                let s = if cb.0 < 0.0 && ca.1 < 0.0 { -1.0 } else { 1.0 };
                s * (ca.0 * ca.0 + ca.1 * ca.1).min(cb.0 * cb.0 + cb.1 * cb.1).sqrt()
            }
            Primitive::Ellipsoid { radii, .. } => {
                let k = len3([q[0] / radii[0], q[1] / radii[1], q[2] / radii[2]]);
                (k - 1.0) * radii[0].min(radii[1]).min(radii[2])
            }
            Primitive::Capsule { half_length, radius, .. } => {
                let x = q[0].clamp(-half_length, half_length);
                len3([q[0] - x, q[1], q[2]]) - radius
            }
            Primitive::Torus { major, minor, .. } => len2(len2(q[0], q[2]) - major, q[1]) - minor,
        }
    }
}

/// Shape families; they double as class labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Box,
    Cylinder,
    Cone,
    Ellipsoid,
    Capsule,
    Torus,
    LBracket,
    TBracket,
    Table,
    Chair,
    Cross,
    SteppedBlock,
}

/// A parameter name with its sampling range.
#[derive(Clone, Copy, Debug)]
pub struct ParamRange {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
}

const fn pr(name: &'static str, lo: f64, hi: f64) -> ParamRange {
    ParamRange { name, lo, hi }
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::Box,
        Family::Cylinder,
        Family::Cone,
        Family::Ellipsoid,
        Family::Capsule,
        Family::Torus,
        Family::LBracket,
        Family::TBracket,
        Family::Table,
        Family::Chair,
        Family::Cross,
        Family::SteppedBlock,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Box => "box",
            Family::Cylinder => "cylinder",
            Family::Cone => "cone",
            Family::Ellipsoid => "ellipsoid",
            Family::Capsule => "capsule",
            Family::Torus => "torus",
            Family::LBracket => "l_bracket",
            Family::TBracket => "t_bracket",
            Family::Table => "table",
            Family::Chair => "chair",
            Family::Cross => "cross",
            Family::SteppedBlock => "stepped_block",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Documented sampling ranges, in the order `ShapeSpec::params` stores them.
    pub fn param_ranges(&self) -> &'static [ParamRange] {
        match self {
            Family::Box => {
                const R: &[ParamRange] = &[pr("half_x", 0.3, 1.0), pr("half_y", 0.3, 1.0), pr("half_z", 0.3, 1.0)];
                R
            }
            Family::Cylinder => {
                const R: &[ParamRange] = &[pr("radius", 0.3, 0.8), pr("half_height", 0.3, 1.0)];
                R
            }
            Family::Cone => {
                const R: &[ParamRange] = &[pr("radius", 0.4, 0.9), pr("height", 0.8, 2.0)];
                R
            }
            Family::Ellipsoid => {
                const R: &[ParamRange] = &[pr("radius_x", 0.35, 1.0), pr("radius_y", 0.35, 1.0), pr("radius_z", 0.35, 1.0)];
                R
            }
            Family::Capsule => {
                const R: &[ParamRange] = &[pr("half_length", 0.3, 0.9), pr("radius", 0.15, 0.45)];
                R
            }
            Family::Torus => {
                const R: &[ParamRange] = &[pr("major", 0.5, 0.9), pr("minor", 0.1, 0.3)];
                R
            }
            Family::LBracket => {
                const R: &[ParamRange] = &[pr("half_length", 0.6, 1.0), pr("height", 0.5, 1.0), pr("thickness", 0.1, 0.25), pr("half_depth", 0.3, 0.8)];
                R
            }
            Family::TBracket => {
                const R: &[ParamRange] = &[pr("half_length", 0.6, 1.0), pr("height", 0.5, 1.0), pr("thickness", 0.1, 0.25), pr("half_depth", 0.2, 0.6)];
                R
            }
            Family::Table => {
                const R: &[ParamRange] = &[
                pr("top_half_x", 0.6, 1.0),
                pr("top_half_z", 0.4, 0.9),
                pr("height", 0.4, 0.9),
                pr("top_thickness", 0.04, 0.1),
                pr("leg_half_width", 0.04, 0.1),
            ];
                R
            }
            Family::Chair => {
                const R: &[ParamRange] = &[
                pr("seat_half", 0.35, 0.6),
                pr("leg_height", 0.3, 0.6),
                pr("back_height", 0.4, 0.9),
                pr("thickness", 0.04, 0.1),
                pr("leg_half_width", 0.03, 0.08),
            ];
                R
            }
            Family::Cross => {
                const R: &[ParamRange] = &[pr("arm_half_length", 0.6, 1.0), pr("arm_half_width", 0.1, 0.3), pr("half_height", 0.1, 0.4)];
                R
            }
            Family::SteppedBlock => {
                const R: &[ParamRange] = &[pr("steps", 2.0, 4.0), pr("step_depth", 0.2, 0.4), pr("step_height", 0.15, 0.35), pr("half_width", 0.3, 0.7)];
                R
            }
        }
    }

    /// Unnormalised primitives for a parameter vector.
    fn primitives(&self, p: &[f64]) -> Vec<Primitive> {
        use Primitive as P;
        const O: Vec3 = [0.0; 3];
        match self {
            Family::Box => vec![P::Box { center: O, half: [p[0], p[1], p[2]] }],
            Family::Cylinder => vec![P::Cylinder { center: O, radius: p[0], half_height: p[1] }],
            Family::Cone => vec![P::Cone { center: O, radius: p[0], height: p[1] }],
            Family::Ellipsoid => vec![P::Ellipsoid { center: O, radii: [p[0], p[1], p[2]] }],
            Family::Capsule => vec![P::Capsule { center: O, half_length: p[0], radius: p[1] }],
            Family::Torus => vec![P::Torus { center: O, major: p[0], minor: p[1] }],
            Family::LBracket => {
                let (l, h, t, d) = (p[0], p[1], p[2], p[3]);
                vec![
                    P::Box { center: [0.0, t / 2.0, 0.0], half: [l, t / 2.0, d] },
                    P::Box { center: [-l + t / 2.0, h / 2.0, 0.0], half: [t / 2.0, h / 2.0, d] },
                ]
            }
            Family::TBracket => {
                let (l, h, t, d) = (p[0], p[1], p[2], p[3]);
                vec![
                    P::Box { center: [0.0, h - t / 2.0, 0.0], half: [l, t / 2.0, d] },
                    P::Box { center: [0.0, (h - t) / 2.0, 0.0], half: [t / 2.0, (h - t) / 2.0, d] },
                ]
            }
            Family::Table => {
                let (tx, tz, h, tt, lw) = (p[0], p[1], p[2], p[3], p[4]);
                let leg_half = (h - tt) / 2.0;
                let mut v = vec![P::Box { center: [0.0, h - tt / 2.0, 0.0], half: [tx, tt / 2.0, tz] }];
                for (sx, sz) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                    v.push(P::Box { center: [sx * (tx - lw), leg_half, sz * (tz - lw)], half: [lw, leg_half, lw] });
                }
                v
            }
            Family::Chair => {
                let (s, legs, back, t, lw) = (p[0], p[1], p[2], p[3], p[4]);
                let mut v = vec![
                    P::Box { center: [0.0, legs + t / 2.0, 0.0], half: [s, t / 2.0, s] },
                    P::Box { center: [0.0, legs + t + back / 2.0, -s + t / 2.0], half: [s, back / 2.0, t / 2.0] },
                ];
                for (sx, sz) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                    v.push(P::Box { center: [sx * (s - lw), legs / 2.0, sz * (s - lw)], half: [lw, legs / 2.0, lw] });
                }
                v
            }
            Family::Cross => {
                let (a, w, hh) = (p[0], p[1], p[2]);
                vec![P::Box { center: O, half: [a, hh, w] }, P::Box { center: O, half: [w, hh, a] }]
            }
            Family::SteppedBlock => {
                let n = p[0].round().max(1.0) as usize;
                let (d, sh, w) = (p[1], p[2], p[3]);
                (0..n)
                    .map(|i| {
                        let h = (n - i) as f64 * sh;
                        P::Box { center: [i as f64 * d, h / 2.0, 0.0], half: [d / 2.0, h / 2.0, w] }
                    })
                    .collect()
            }
        }
    }
}

/// A concrete shape instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeSpec {
    pub family: Family,
    pub params: Vec<f64>,
    pub instance_seed: u64,
}

impl ShapeSpec {
    pub fn new(family: Family, params: Vec<f64>) -> Self {
        ShapeSpec { family, params, instance_seed: 0 }
    }

    /// Draws every parameter uniformly from its documented range.
    pub fn sample<R: Rng + ?Sized>(family: Family, rng: &mut R, instance_seed: u64) -> Self {
        let params = family.param_ranges().iter().map(|r| rng.gen_range(r.lo..=r.hi)).collect();
        ShapeSpec { family, params, instance_seed }
    }

    /// The normalised solid.
    pub fn solid(&self) -> Solid {
        Solid::normalized(self.family.primitives(&self.params))
    }
}

/// Union of primitives in normalised coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Solid {
    prims: Vec<Primitive>,
    scale: f64,
}

impl Solid {
    /// Centres the union on its bounding box and scales it into the sphere of
    /// radius [`NORMALIZED_RADIUS`].
    pub fn normalized(mut prims: Vec<Primitive>) -> Self {
        if prims.is_empty() {
            return Solid { prims, scale: 1.0 };
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &prims {
            let (c, h) = (p.center(), p.half_extents());
            for a in 0..3 {
                lo[a] = lo[a].min(c[a] - h[a]);
                hi[a] = hi[a].max(c[a] + h[a]);
            }
        }
        let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, (lo[2] + hi[2]) / 2.0];
        for p in prims.iter_mut() {
            let c = p.center_mut();
            for a in 0..3 {
                c[a] -= mid[a];
            }
        }
        let radius = prims.iter().map(Primitive::bounding_radius).fold(0.0, f64::max);
        Solid { prims, scale: NORMALIZED_RADIUS / radius }
    }

    /// Primitives used as-is, without centring or scaling.
    pub fn raw(prims: Vec<Primitive>) -> Self {
        Solid { prims, scale: 1.0 }
    }

    /// The empty scene.
    pub fn empty() -> Self {
        Solid { prims: Vec::new(), scale: 1.0 }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Conservative bounding radius in world units.
    pub fn bounding_radius(&self) -> f64 {
        self.prims.iter().map(Primitive::bounding_radius).fold(0.0, f64::max) * self.scale
    }

    pub fn distance(&self, p: Vec3) -> f64 {
        let s = self.scale;
        let q = [p[0] / s, p[1] / s, p[2] / s];
        let mut d = f64::INFINITY;
        for prim in &self.prims {
            d = d.min(prim.distance(q));
        }
        d * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn every_family_fits_the_unit_sphere() {
        let mut rng = stream(5, Stream::Aux, 0);
        for family in Family::ALL {
            for _ in 0..20 {
                let solid = ShapeSpec::sample(family, &mut rng, 0).solid();
                assert!(solid.bounding_radius() <= NORMALIZED_RADIUS + 1e-12, "{family:?}");
                // probe a spherical shell just outside radius 1: always outside the solid
                for i in 0..200 {
                    let t = i as f64 * 0.731;
                    let z = (i as f64 / 100.0) - 1.0;
                    let r = (1.0 - z * z).sqrt();
                    let p = [1.0 * r * t.cos(), z, r * t.sin()];
                    assert!(solid.distance(p) > 0.0, "{family:?} reaches {p:?}");
                }
                // origin region is generally near or inside; the SDF must be finite everywhere
                assert!(solid.distance([0.0; 3]).is_finite());
            }
        }
    }

    #[test]
    fn identical_params_identical_field() {
        let mut rng = stream(6, Stream::Aux, 0);
        let a = ShapeSpec::sample(Family::Chair, &mut rng, 1);
        let b = ShapeSpec::new(Family::Chair, a.params.clone());
        let (sa, sb) = (a.solid(), b.solid());
        for i in 0..50 {
            let p = [(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos() * 0.5, (i as f64 * 0.23).sin() * 0.7];
            assert_eq!(sa.distance(p).to_bits(), sb.distance(p).to_bits());
        }
    }

    #[test]
    fn primitive_distances_on_known_points() {
        let b = Primitive::Box { center: [0.0; 3], half: [1.0, 1.0, 1.0] };
        assert!((b.distance([2.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((b.distance([0.0, 0.0, 0.0]) + 1.0).abs() < 1e-12);
        let c = Primitive::Cylinder { center: [0.0; 3], radius: 0.5, half_height: 1.0 };
        assert!((c.distance([1.5, 0.0, 0.0]) - 1.0).abs() < 1e-12);
        let cone = Primitive::Cone { center: [0.0; 3], radius: 1.0, height: 2.0 };
        assert!((cone.distance([0.0, 2.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((cone.distance([0.0, -2.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!(cone.distance([0.0, 0.0, 0.0]) < 0.0);
        let t = Primitive::Torus { center: [0.0; 3], major: 1.0, minor: 0.25 };
        assert!((t.distance([1.0, 0.0, 0.0]) + 0.25).abs() < 1e-12);
        let cap = Primitive::Capsule { center: [0.0; 3], half_length: 1.0, radius: 0.5 };
        assert!((cap.distance([2.0, 0.0, 0.0]) - 0.5).abs() < 1e-12);
    }
}
