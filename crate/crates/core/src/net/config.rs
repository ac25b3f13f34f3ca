use crate::error::{Error, Result};
use crate::kv::{join_list, parse_list, KvMap};
use crate::ndtensor::OptimizerConfig;
use crate::viewgrid::{sample_view_sphere, Alignment, ViewSphereSpec};

/// What the decoder predicts and how its loss is aligned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Full viewgrid, azimuth origin at the observed view ("ours").
    Relative,
    /// Full viewgrid in the dataset's canonical axes ("ours w. CA").
    Canonical,
    /// Reconstructs the input view only.
    Autoencoder,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Relative, Variant::Canonical, Variant::Autoencoder];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Relative => "ours",
            Variant::Canonical => "ca",
            Variant::Autoencoder => "autoencoder",
        }
    }

    pub fn from_name(s: &str) -> Result<Variant> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown variant '{s}' (expected ours, ca or autoencoder)")))
    }

    /// Alignment of the predicted viewgrid; `None` for the autoencoder.
    pub fn alignment(&self) -> Option<Alignment> {
        match self {
            Variant::Relative => Some(Alignment::Relative),
            Variant::Canonical => Some(Alignment::Canonical),
            Variant::Autoencoder => None,
        }
    }
}

/// Network shape. The image side must be a multiple of 8: three stride-2
/// convolutions reduce it to `image_size / 8`, and three stride-2
/// deconvolutions bring it back.
#[derive(Clone, Debug, PartialEq)]
pub struct NetConfig {
    pub image_size: usize,
    /// ShapeCode length (fc2 and fc3 width).
    pub code_dim: usize,
    /// Image-sensor output width.
    pub fc1_dim: usize,
    /// Elevation-sensor width.
    pub elev_dim: usize,
    pub conv_channels: [usize; 3],
    /// Channels after the fc4 reshape, after deconv1, after deconv2.
    pub decoder_channels: [usize; 3],
    pub azimuths: usize,
    pub elevations: Vec<i16>,
    pub variant: Variant,
}

const NET_KEYS: &[&str] =
    &["net.image_size", "net.code_dim", "net.fc1_dim", "net.elev_dim", "net.conv_channels", "net.decoder_channels", "net.azimuths", "net.elevations", "net.variant"];

impl NetConfig {
    /// Full-size network for a grid.
    pub fn new(spec: &ViewSphereSpec, variant: Variant) -> Self {
        NetConfig {
            image_size: 32,
            code_dim: 256,
            fc1_dim: 256,
            elev_dim: 16,
            conv_channels: [32, 64, 128],
            decoder_channels: [256, 128, 64],
            azimuths: spec.num_azimuths(),
            elevations: spec.elevations().to_vec(),
            variant,
        }
    }

    /// 8×8 images and narrow layers, for 64-bit gradient checks.
    pub fn miniature(spec: &ViewSphereSpec, variant: Variant) -> Self {
        NetConfig {
            image_size: 8,
            code_dim: 6,
            fc1_dim: 5,
            elev_dim: 3,
            conv_channels: [2, 3, 4],
            decoder_channels: [4, 3, 2],
            ..NetConfig::new(spec, variant)
        }
    }

    pub fn spec(&self) -> Result<ViewSphereSpec> {
        sample_view_sphere(self.azimuths, &self.elevations)
    }

    /// `image_size / 8`.
    pub fn base_size(&self) -> usize {
        self.image_size / 8
    }

    /// Decoder maps: `N·M`, or 1 for the autoencoder.
    pub fn output_channels(&self) -> usize {
        match self.variant {
            Variant::Autoencoder => 1,
            _ => self.azimuths * self.elevations.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_size == 0 || self.image_size % 8 != 0 {
            return Err(Error::invalid(format!("image size must be a positive multiple of 8, got {}", self.image_size)));
        }
        let widths = [self.code_dim, self.fc1_dim, self.elev_dim];
        if widths.iter().chain(&self.conv_channels).chain(&self.decoder_channels).any(|&w| w == 0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        let spec = self.spec()?;
        if spec.elevations() != self.elevations.as_slice() {
            return Err(Error::invalid("elevations must be listed in increasing order"));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvMap {
        let mut m = KvMap::new();
        m.set("net.image_size", self.image_size);
        m.set("net.code_dim", self.code_dim);
        m.set("net.fc1_dim", self.fc1_dim);
        m.set("net.elev_dim", self.elev_dim);
        m.set("net.conv_channels", join_list(&self.conv_channels));
        m.set("net.decoder_channels", join_list(&self.decoder_channels));
        m.set("net.azimuths", self.azimuths);
        m.set("net.elevations", join_list(&self.elevations));
        m.set("net.variant", self.variant.name());
        m
    }

    /// Reads the `net.*` keys of `m`; every key is required.
    pub fn from_kv(m: &KvMap) -> Result<Self> {
        let triple = |key: &str| -> Result<[usize; 3]> {
            let v: Vec<usize> = parse_list(m.require(key)?)?;
            v.try_into().map_err(|_| Error::invalid(format!("'{key}' needs three values")))
        };
        let num = |key: &str| -> Result<usize> { m.require(key)?.parse().map_err(|_| Error::invalid(format!("bad value for '{key}'"))) };
        let cfg = NetConfig {
            image_size: num("net.image_size")?,
            code_dim: num("net.code_dim")?,
            fc1_dim: num("net.fc1_dim")?,
            elev_dim: num("net.elev_dim")?,
            conv_channels: triple("net.conv_channels")?,
            decoder_channels: triple("net.decoder_channels")?,
            azimuths: num("net.azimuths")?,
            elevations: parse_list(m.require("net.elevations")?)?,
            variant: Variant::from_name(m.require("net.variant")?)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn keys() -> &'static [&'static str] {
        NET_KEYS
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// The learning rate inside is overridden by each `lr_grid` entry.
    pub optimizer: OptimizerConfig,
    pub lr_grid: Vec<f64>,
    /// Consecutive validation evaluations without improvement before stopping.
    pub patience: usize,
    /// Optimisation steps between validation evaluations; 0 = once per epoch.
    pub val_interval: usize,
    pub max_epochs: usize,
    /// Fixed observed views drawn per validation object.
    pub val_views_per_object: usize,
    pub seed: u64,
}

const TRAIN_KEYS: &[&str] =
    &["train.momentum", "train.batch_size", "train.lr_grid", "train.patience", "train.val_interval", "train.max_epochs", "train.val_views_per_object", "train.seed"];

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerConfig::default(),
            lr_grid: vec![0.1, 0.03, 0.01, 0.003],
            patience: 3,
            val_interval: 0,
            max_epochs: 100,
            val_views_per_object: 4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience == 0 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        if self.lr_grid.is_empty() {
            return Err(Error::invalid("learning-rate grid is empty"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be positive"));
        }
        if self.val_views_per_object == 0 {
            return Err(Error::invalid("need at least one validation view per object"));
        }
        for &lr in &self.lr_grid {
            OptimizerConfig { learning_rate: lr, ..self.optimizer.clone() }.validate()?;
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvMap {
        let mut m = KvMap::new();
        m.set("train.momentum", self.optimizer.momentum);
        m.set("train.batch_size", self.optimizer.batch_size);
        m.set("train.lr_grid", join_list(&self.lr_grid));
        m.set("train.patience", self.patience);
        m.set("train.val_interval", self.val_interval);
        m.set("train.max_epochs", self.max_epochs);
        m.set("train.val_views_per_object", self.val_views_per_object);
        m.set("train.seed", self.seed);
        m
    }

    /// Reads the `train.*` keys of `m`; absent keys keep their defaults.
    pub fn from_kv(m: &KvMap) -> Result<Self> {
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            optimizer: OptimizerConfig {
                learning_rate: d.optimizer.learning_rate,
                momentum: m.parsed_or("train.momentum", d.optimizer.momentum)?,
                batch_size: m.parsed_or("train.batch_size", d.optimizer.batch_size)?,
            },
            lr_grid: match m.get("train.lr_grid") {
                Some(s) => parse_list(s)?,
                None => d.lr_grid,
            },
            patience: m.parsed_or("train.patience", d.patience)?,
            val_interval: m.parsed_or("train.val_interval", d.val_interval)?,
            max_epochs: m.parsed_or("train.max_epochs", d.max_epochs)?,
            val_views_per_object: m.parsed_or("train.val_views_per_object", d.val_views_per_object)?,
            seed: m.parsed_or("train.seed", d.seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn keys() -> &'static [&'static str] {
        TRAIN_KEYS
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trips() {
        let net = NetConfig::new(&ViewSphereSpec::modelnet(), Variant::Canonical);
        assert_eq!(NetConfig::from_kv(&net.to_kv()).unwrap(), net);
        let train = TrainConfig { lr_grid: vec![0.01], seed: 9, ..TrainConfig::default() };
        assert_eq!(TrainConfig::from_kv(&train.to_kv()).unwrap(), train);
        assert!(Variant::from_name("gan").is_err());
    }

    #[test]
    fn output_channels_per_variant() {
        let spec = ViewSphereSpec::modelnet();
        assert_eq!(NetConfig::new(&spec, Variant::Relative).output_channels(), 84);
        assert_eq!(NetConfig::new(&spec, Variant::Autoencoder).output_channels(), 1);
        let mut bad = NetConfig::new(&spec, Variant::Relative);
        bad.image_size = 30;
        assert!(bad.validate().is_err());
        let zero_patience = TrainConfig { patience: 0, ..TrainConfig::default() };
        assert!(zero_patience.validate().is_err());
    }
}
