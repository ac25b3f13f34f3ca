//! Rendered viewgrid datasets and the `VGDS` container.
//!
//! Layout (little-endian):
//!
//! ```text
//! "VGDS"  version:u32 = 1
//! num_objects:u32  num_elevations:u16  num_azimuths:u16  H:u16  W:u16
//! elevations: i16 × num_elevations                       (degrees)
//! split tags: count:u8, then {id:u8, len:u8, name}       (train, val, test, unseen_train, unseen_test)
//! render:     max_steps:u32 hit_threshold:f64 ortho_window:f64 ambient:f64
//!             diffuse:f64 light:f64×3 background:f64
//! classes:    count:u16, then {len:u8, name, seen:u8}
//! seed:u64
//! objects:    {class_id:u16, split:u8, pixels:u8 × N·M·H·W}  row-major [elev][azim][row][col]
//! ```
//!
//! Pixels are `round(255·v)`; readers map them back with `v / 255`.

use rand::Rng;
use rayon::prelude::*;

use super::render::{render_viewgrid, RenderConfig};
use super::sdf::{Family, ShapeSpec};
use crate::binio::{sha256_hex, Reader};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};
use crate::scalar::Real;
use crate::viewgrid::{quantize, sample_view_sphere, ViewIndex, ViewSphereSpec, Viewgrid};

const MAGIC: &[u8; 4] = b"VGDS";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Split {
    Train = 0,
    Val = 1,
    Test = 2,
    UnseenTrain = 3,
    UnseenTest = 4,
}

impl Split {
    pub const ALL: [Split; 5] = [Split::Train, Split::Val, Split::Test, Split::UnseenTrain, Split::UnseenTest];

    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::UnseenTrain => "unseen_train",
            Split::UnseenTest => "unseen_test",
        }
    }

    pub fn from_name(s: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|x| x.name() == s)
    }

    pub fn from_u8(v: u8) -> Option<Split> {
        Split::ALL.get(v as usize).copied()
    }

    pub fn is_unseen(&self) -> bool {
        matches!(self, Split::UnseenTrain | Split::UnseenTest)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassInfo {
    pub name: String,
    /// Present during self-supervised training.
    pub seen: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetObject {
    pub class_id: u16,
    pub split: Split,
    /// Quantised pixels, `N·M·H·W` bytes.
    pub pixels: Vec<u8>,
}

/// Which families to render and how to split them.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetConfig {
    pub seen: Vec<Family>,
    pub unseen: Vec<Family>,
    pub instances_per_class: usize,
    /// Seen classes: fraction of instances in train, then val; the rest is test.
    pub train_fraction: f64,
    pub val_fraction: f64,
    /// Unseen classes: fraction in unseen_train; the rest is unseen_test.
    pub unseen_train_fraction: f64,
}

impl DatasetConfig {
    /// The first `num_classes` families of [`Family::ALL`], holding out the last `num_unseen`.
    pub fn first(num_classes: usize, num_unseen: usize, instances_per_class: usize) -> Result<Self> {
        if num_classes > Family::ALL.len() {
            return Err(Error::invalid(format!("{num_classes} classes requested, only {} families exist", Family::ALL.len())));
        }
        if num_unseen > num_classes {
            return Err(Error::invalid("more unseen classes than classes"));
        }
        let fams = &Family::ALL[..num_classes];
        Ok(DatasetConfig {
            seen: fams[..num_classes - num_unseen].to_vec(),
            unseen: fams[num_classes - num_unseen..].to_vec(),
            instances_per_class,
            train_fraction: 0.6,
            val_fraction: 0.2,
            unseen_train_fraction: 0.6,
        })
    }

    pub fn families(&self) -> Vec<Family> {
        self.seen.iter().chain(&self.unseen).copied().collect()
    }

    fn validate(&self) -> Result<()> {
        let all = self.families();
        if all.is_empty() {
            return Err(Error::invalid("no classes requested"));
        }
        if all.len() > Family::ALL.len() {
            return Err(Error::invalid(format!("{} classes requested, only {} families exist", all.len(), Family::ALL.len())));
        }
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != all.len() {
            return Err(Error::invalid("a family is listed twice"));
        }
        if self.instances_per_class == 0 || self.instances_per_class > u16::MAX as usize {
            return Err(Error::invalid("instances per class must be in 1..=65535"));
        }
        for f in [self.train_fraction, self.val_fraction, self.unseen_train_fraction] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::invalid("split fractions must lie in [0, 1]"));
            }
        }
        if self.train_fraction + self.val_fraction > 1.0 + 1e-12 {
            return Err(Error::invalid("train + val fractions exceed 1"));
        }
        Ok(())
    }

    /// Split of instance `index` for a seen or unseen class.
    pub fn split_of(&self, index: usize, unseen: bool) -> Split {
        let n = self.instances_per_class as f64;
        if unseen {
            if index < (n * self.unseen_train_fraction).round() as usize {
                Split::UnseenTrain
            } else {
                Split::UnseenTest
            }
        } else {
            let train = (n * self.train_fraction).round() as usize;
            let val = (n * self.val_fraction).round() as usize;
            if index < train {
                Split::Train
            } else if index < train + val {
                Split::Val
            } else {
                Split::Test
            }
        }
    }
}

/// Shape instance `index` of class `class_id` under `seed`.
pub fn instance_shape(seed: u64, class_id: u16, family: Family, index: usize) -> ShapeSpec {
    let mut rng = stream(seed, Stream::ShapeParams, ((class_id as u32) << 16) | index as u32);
    let instance_seed: u64 = rng.gen();
    ShapeSpec::sample(family, &mut rng, instance_seed)
}

/// Renders every instance of every class. Pure in `(config, spec, render, seed)`.
pub fn generate_dataset(config: &DatasetConfig, spec: &ViewSphereSpec, render: &RenderConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let families = config.families();
    let n_seen = config.seen.len();
    let jobs: Vec<(u16, Family, usize)> = families
        .iter()
        .enumerate()
        .flat_map(|(c, &f)| (0..config.instances_per_class).map(move |i| (c as u16, f, i)))
        .collect();
    let objects = jobs
        .par_iter()
        .map(|&(class_id, family, index)| {
            let shape = instance_shape(seed, class_id, family, index);
            let vg = render_viewgrid(&shape.solid(), spec, render);
            DatasetObject {
                class_id,
                split: config.split_of(index, class_id as usize >= n_seen),
                pixels: vg.data().iter().map(|&v| quantize(v)).collect(),
            }
        })
        .collect();
    let classes = families.iter().enumerate().map(|(c, f)| ClassInfo { name: f.name().to_string(), seen: c < n_seen }).collect();
    Ok(Dataset { spec: spec.clone(), image_size: render.image_size, render: render.clone(), classes, seed, objects })
}

/// An in-memory viewgrid dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub spec: ViewSphereSpec,
    /// Square image side.
    pub image_size: usize,
    pub render: RenderConfig,
    pub classes: Vec<ClassInfo>,
    pub seed: u64,
    pub objects: Vec<DatasetObject>,
}

impl Dataset {
    /// Imports externally rendered viewgrids (values in `[0, 1]`).
    pub fn from_viewgrids(classes: Vec<ClassInfo>, grids: &[(Viewgrid<f64>, Split)]) -> Result<Self> {
        let (first, _) = grids.first().ok_or_else(|| Error::Empty("no viewgrids to import".into()))?;
        if first.height() != first.width() {
            return Err(Error::invalid("views must be square"));
        }
        let mut objects = Vec::with_capacity(grids.len());
        for (vg, split) in grids {
            first.ensure_compatible(vg)?;
            let class_id = vg.class_id.ok_or_else(|| Error::invalid("imported viewgrid lacks a class id"))?;
            if class_id as usize >= classes.len() {
                return Err(Error::invalid(format!("class id {class_id} outside class table")));
            }
            objects.push(DatasetObject { class_id, split: *split, pixels: vg.data().iter().map(|&v| quantize(v)).collect() });
        }
        Ok(Dataset {
            spec: first.spec().clone(),
            image_size: first.height(),
            render: RenderConfig { image_size: first.height(), ..RenderConfig::default() },
            classes,
            seed: 0,
            objects,
        })
    }

    pub fn image_len(&self) -> usize {
        self.image_size * self.image_size
    }

    pub fn viewgrid_len(&self) -> usize {
        self.spec.num_views() * self.image_len()
    }

    pub fn num_images(&self) -> usize {
        self.objects.len() * self.spec.num_views()
    }

    /// Object `i` as a viewgrid with values `v / 255`.
    pub fn viewgrid<T: Real>(&self, i: usize) -> Viewgrid<T> {
        let o = &self.objects[i];
        let data = o.pixels.iter().map(|&p| T::of(p as f64 / 255.0)).collect();
        Viewgrid::new(self.spec.clone(), self.image_size, self.image_size, data).expect("consistent dataset").with_class(o.class_id)
    }

    /// Quantised pixels of one view of object `i`.
    pub fn view_pixels(&self, i: usize, idx: ViewIndex) -> &[u8] {
        let n = self.image_len();
        let f = idx.flat(&self.spec);
        &self.objects[i].pixels[f * n..(f + 1) * n]
    }

    pub fn view<T: Real>(&self, i: usize, idx: ViewIndex) -> Vec<T> {
        self.view_pixels(i, idx).iter().map(|&p| T::of(p as f64 / 255.0)).collect()
    }

    /// Indices of objects in `split`, in file order.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        self.objects.iter().enumerate().filter(|(_, o)| o.split == split).map(|(i, _)| i).collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.objects.iter().filter(|o| o.split == split).count()
    }

    pub fn class_name(&self, id: u16) -> &str {
        self.classes.get(id as usize).map(|c| c.name.as_str()).unwrap_or("?")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(64 + self.objects.len() * (3 + self.viewgrid_len()));
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&(self.objects.len() as u32).to_le_bytes());
        b.extend_from_slice(&(self.spec.num_elevations() as u16).to_le_bytes());
        b.extend_from_slice(&(self.spec.num_azimuths() as u16).to_le_bytes());
        b.extend_from_slice(&(self.image_size as u16).to_le_bytes());
        b.extend_from_slice(&(self.image_size as u16).to_le_bytes());
        for &e in self.spec.elevations() {
            b.extend_from_slice(&e.to_le_bytes());
        }
        b.push(Split::ALL.len() as u8);
        for s in Split::ALL {
            b.push(s as u8);
            b.push(s.name().len() as u8);
            b.extend_from_slice(s.name().as_bytes());
        }
        let r = &self.render;
        b.extend_from_slice(&r.max_steps.to_le_bytes());
        for v in [r.hit_threshold, r.ortho_window, r.ambient, r.diffuse, r.light_direction[0], r.light_direction[1], r.light_direction[2], r.background] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&(self.classes.len() as u16).to_le_bytes());
        for c in &self.classes {
            b.push(c.name.len() as u8);
            b.extend_from_slice(c.name.as_bytes());
            b.push(c.seen as u8);
        }
        b.extend_from_slice(&self.seed.to_le_bytes());
        for o in &self.objects {
            b.extend_from_slice(&o.class_id.to_le_bytes());
            b.push(o.split as u8);
            b.extend_from_slice(&o.pixels);
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::format("VGDS", "bad magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format("VGDS", format!("unsupported version {version}")));
        }
        let num_objects = r.u32()? as usize;
        let n_el = r.u16()? as usize;
        let n_az = r.u16()? as usize;
        let h = r.u16()? as usize;
        let w = r.u16()? as usize;
        if h != w || h == 0 {
            return Err(Error::format("VGDS", format!("views must be square and non-empty, got {h}x{w}")));
        }
        let elevations = (0..n_el).map(|_| r.i16()).collect::<Result<Vec<_>>>()?;
        let spec = sample_view_sphere(n_az, &elevations).map_err(|e| Error::format("VGDS", e.to_string()))?;
        if spec.elevations() != elevations.as_slice() {
            return Err(Error::format("VGDS", "elevations not strictly increasing"));
        }
        let n_tags = r.u8()?;
        for _ in 0..n_tags {
            let id = r.u8()?;
            let len = r.u8()? as usize;
            let name = r.string(len)?;
            if Split::from_u8(id).map(|s| s.name()) != Some(name.as_str()) {
                return Err(Error::format("VGDS", format!("unknown split tag {id}={name}")));
            }
        }
        let max_steps = r.u32()?;
        let mut f = [0.0; 8];
        for v in f.iter_mut() {
            *v = r.f64()?;
        }
        let render = RenderConfig {
            image_size: h,
            max_steps,
            hit_threshold: f[0],
            ortho_window: f[1],
            ambient: f[2],
            diffuse: f[3],
            light_direction: [f[4], f[5], f[6]],
            background: f[7],
        };
        let n_classes = r.u16()? as usize;
        let mut classes = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            let len = r.u8()? as usize;
            let name = r.string(len)?;
            let seen = r.u8()? != 0;
            classes.push(ClassInfo { name, seen });
        }
        let seed = r.u64()?;
        let grid_len = n_el * n_az * h * w;
        let mut objects = Vec::with_capacity(num_objects);
        for _ in 0..num_objects {
            let class_id = r.u16()?;
            if class_id as usize >= n_classes {
                return Err(Error::format("VGDS", format!("class id {class_id} outside class table")));
            }
            let split = Split::from_u8(r.u8()?).ok_or_else(|| Error::format("VGDS", "bad split tag"))?;
            let pixels = r.take(grid_len)?.to_vec();
            objects.push(DatasetObject { class_id, split, pixels });
        }
        if r.pos != bytes.len() {
            return Err(Error::format("VGDS", "trailing bytes"));
        }
        Ok(Dataset { spec, image_size: h, render, classes, seed, objects })
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Hex SHA-256 of the serialised dataset.
    pub fn hash(&self) -> String {
        sha256_hex(&self.to_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (DatasetConfig, ViewSphereSpec, RenderConfig) {
        let cfg = DatasetConfig::first(5, 1, 4).unwrap();
        let spec = sample_view_sphere(4, &[0, 30]).unwrap();
        let render = RenderConfig { image_size: 16, ..RenderConfig::default() };
        (cfg, spec, render)
    }

    #[test]
    fn same_seed_same_bytes() {
        let (cfg, spec, render) = small();
        let a = generate_dataset(&cfg, &spec, &render, 11).unwrap().to_bytes();
        let b = generate_dataset(&cfg, &spec, &render, 11).unwrap().to_bytes();
        let c = generate_dataset(&cfg, &spec, &render, 12).unwrap().to_bytes();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn byte_round_trip() {
        let (cfg, spec, render) = small();
        let ds = generate_dataset(&cfg, &spec, &render, 3).unwrap();
        let bytes = ds.to_bytes();
        let back = Dataset::from_bytes(&bytes).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.to_bytes(), bytes);
        assert!(Dataset::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Dataset::from_bytes(&bad).is_err());
    }

    #[test]
    fn splits_and_classes() {
        let cfg = DatasetConfig::first(3, 1, 10).unwrap();
        let spec = sample_view_sphere(2, &[0]).unwrap();
        let ds = generate_dataset(&cfg, &spec, &RenderConfig { image_size: 8, ..Default::default() }, 1).unwrap();
        assert_eq!(ds.objects.len(), 30);
        assert_eq!(ds.count(Split::Train), 12);
        assert_eq!(ds.count(Split::Val), 4);
        assert_eq!(ds.count(Split::Test), 4);
        assert_eq!(ds.count(Split::UnseenTrain), 6);
        assert_eq!(ds.count(Split::UnseenTest), 4);
        assert!(ds.classes[0].seen && ds.classes[1].seen && !ds.classes[2].seen);
        assert!(ds.objects.iter().filter(|o| o.split.is_unseen()).all(|o| o.class_id == 2));
    }

    #[test]
    fn too_many_classes_is_an_error() {
        assert!(DatasetConfig::first(13, 0, 5).is_err());
        let mut cfg = DatasetConfig::first(2, 0, 5).unwrap();
        cfg.unseen = vec![Family::Box];
        let spec = sample_view_sphere(2, &[0]).unwrap();
        assert!(generate_dataset(&cfg, &spec, &RenderConfig::default(), 0).is_err());
    }

    #[test]
    fn import_round_trip() {
        let spec = sample_view_sphere(2, &[0]).unwrap();
        let vg = Viewgrid::new(spec, 2, 2, vec![0.0, 0.5, 1.0, 0.25, 1.0, 1.0, 0.0, 0.0]).unwrap().with_class(1);
        let classes = vec![ClassInfo { name: "a".into(), seen: true }, ClassInfo { name: "b".into(), seen: true }];
        let ds = Dataset::from_viewgrids(classes, &[(vg.clone(), Split::Test)]).unwrap();
        let back = Dataset::from_bytes(&ds.to_bytes()).unwrap();
        assert_eq!(back.objects[0].pixels, vec![0, 128, 255, 64, 255, 255, 0, 0]);
        assert_eq!(back.viewgrid::<f64>(0).class_id, Some(1));
    }
}
