//! The `SCPT` checkpoint container.
//!
//! ```text
//! "SCPT"  version:u32 = 1
//! metadata: len:u32, UTF-8 key=value lines (net.*, train.*, seed, dataset_sha256, ...)
//! count:u32, then per tensor {name_len:u32, name, rank:u8, dims:u32 × rank, values:f32 × Π dims}
//! ```
//!
//! Tensors are named `<layer>.weight` / `<layer>.bias`, in network order.

use std::path::Path;

use super::config::NetConfig;
use super::model::ShapeCodeNet;
use crate::error::{Error, Result};
use crate::kv::KvMap;
use crate::ndtensor::Tensor;
use crate::binio::{sha256_hex, Reader};

const MAGIC: &[u8; 4] = b"SCPT";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub metadata: KvMap,
    pub tensors: Vec<(String, Tensor<f32>)>,
}

impl Checkpoint {
    /// Snapshot of `net`; `extra` metadata is appended after the network config.
    pub fn from_net(net: &ShapeCodeNet<f32>, extra: &KvMap) -> Self {
        let mut metadata = net.config().to_kv();
        metadata.extend(extra);
        let mut tensors = Vec::new();
        for l in net.layers() {
            tensors.push((format!("{}.weight", l.name), l.weight.clone()));
            tensors.push((format!("{}.bias", l.name), l.bias.clone()));
        }
        Checkpoint { metadata, tensors }
    }

    pub fn net_config(&self) -> Result<NetConfig> {
        NetConfig::from_kv(&self.metadata)
    }

    /// Rebuilds the network; names and shapes must match exactly.
    pub fn to_net(&self) -> Result<ShapeCodeNet<f32>> {
        let mut net = ShapeCodeNet::<f32>::new(self.net_config()?, 0)?;
        let layers = net.layers_mut();
        if self.tensors.len() != 2 * layers.len() {
            return Err(Error::format("SCPT", format!("expected {} tensors, found {}", 2 * layers.len(), self.tensors.len())));
        }
        for (l, pair) in layers.into_iter().zip(self.tensors.chunks(2)) {
            let (wn, w) = &pair[0];
            let (bn, b) = &pair[1];
            if *wn != format!("{}.weight", l.name) || *bn != format!("{}.bias", l.name) {
                return Err(Error::format("SCPT", format!("unexpected tensors {wn}, {bn} for layer {}", l.name)));
            }
            l.load(w.clone(), b.clone()).map_err(|e| Error::format("SCPT", e.to_string()))?;
        }
        Ok(net)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        let meta = self.metadata.render();
        b.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        b.extend_from_slice(meta.as_bytes());
        b.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            b.extend_from_slice(&(name.len() as u32).to_le_bytes());
            b.extend_from_slice(name.as_bytes());
            b.push(t.rank() as u8);
            for &d in t.shape() {
                b.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &v in t.data() {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::format("SCPT", "bad magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format("SCPT", format!("unsupported version {version}")));
        }
        let len = r.u32()? as usize;
        let metadata = KvMap::parse(&r.string(len)?)?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = r.string(len)?;
            let rank = r.u8()? as usize;
            let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = dims.iter().product();
            if n > bytes.len() {
                return Err(Error::format("SCPT", format!("tensor {name} larger than the file")));
            }
            let values = (0..n).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
            tensors.push((name, Tensor::from_vec(&dims, values)?));
        }
        if r.pos != bytes.len() {
            return Err(Error::format("SCPT", "trailing bytes"));
        }
        Ok(Checkpoint { metadata, tensors })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn hash(&self) -> String {
        sha256_hex(&self.to_bytes())
    }
}
