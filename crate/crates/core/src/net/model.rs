//! The encoder–decoder: image sensor, elevation sensor, fusion, decoder.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use super::config::{NetConfig, Variant};
use crate::error::{Error, Result};
use crate::ndtensor::{Conv2d, ConvGeometry, Deconv2d, Layer, LayerParams, Linear, Relu, Sigmoid, Tensor};
use crate::rng::{stream, Stream};
use crate::scalar::Real;
use crate::viewgrid::Viewgrid;

/// Stable parameter names, in the order [`ShapeCodeNet::layers`] yields them.
pub const LAYER_NAMES: [&str; 12] =
    ["conv1", "conv2", "conv3", "fc1", "elev_fc1", "elev_fc2", "fc2", "fc3", "fc4", "deconv1", "deconv2", "deconv3"];

const CONV_GEOMETRY: [ConvGeometry; 3] = [ConvGeometry::new(5, 2, 2), ConvGeometry::new(5, 2, 2), ConvGeometry::new(3, 2, 1)];
const DECONV_GEOMETRY: ConvGeometry = ConvGeometry::new(4, 2, 1);

/// Elevation sensor input scaling: degrees / 90.
pub const ELEVATION_SCALE: f64 = 90.0;

/// Encoder layers whose activations serve as features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureLayer {
    /// Image-sensor output.
    Fc1,
    /// First fusion layer.
    Fc2,
    /// The ShapeCode.
    Fc3,
}

impl FeatureLayer {
    pub const ALL: [FeatureLayer; 3] = [FeatureLayer::Fc1, FeatureLayer::Fc2, FeatureLayer::Fc3];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureLayer::Fc1 => "fc1",
            FeatureLayer::Fc2 => "fc2",
            FeatureLayer::Fc3 => "fc3",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        FeatureLayer::ALL.into_iter().find(|l| l.name() == s).ok_or_else(|| Error::invalid(format!("unknown feature layer '{s}'")))
    }
}

/// Encoder activations, each `[B, dim]`.
#[derive(Clone, Debug)]
pub struct Features<T> {
    pub fc1: Tensor<T>,
    pub fc2: Tensor<T>,
    pub fc3: Tensor<T>,
}

impl<T> Features<T> {
    pub fn layer(&self, layer: FeatureLayer) -> &Tensor<T> {
        match layer {
            FeatureLayer::Fc1 => &self.fc1,
            FeatureLayer::Fc2 => &self.fc2,
            FeatureLayer::Fc3 => &self.fc3,
        }
    }
}

#[derive(Debug)]
pub struct ShapeCodeNet<T: Real> {
    config: NetConfig,
    conv: [Conv2d<T>; 3],
    conv_relu: [Relu<T>; 3],
    fc1: Linear<T>,
    fc1_relu: Relu<T>,
    elev: [Linear<T>; 2],
    elev_relu: [Relu<T>; 2],
    fc2: Linear<T>,
    fc2_relu: Relu<T>,
    fc3: Linear<T>,
    fc3_relu: Relu<T>,
    fc4: Linear<T>,
    fc4_relu: Relu<T>,
    deconv: [Deconv2d<T>; 3],
    deconv_relu: [Relu<T>; 2],
    sigmoid: Sigmoid<T>,
    forward_passes: AtomicU64,
}

impl<T: Real> Clone for ShapeCodeNet<T> {
    fn clone(&self) -> Self {
        ShapeCodeNet {
            config: self.config.clone(),
            conv: self.conv.clone(),
            conv_relu: self.conv_relu.clone(),
            fc1: self.fc1.clone(),
            fc1_relu: self.fc1_relu.clone(),
            elev: self.elev.clone(),
            elev_relu: self.elev_relu.clone(),
            fc2: self.fc2.clone(),
            fc2_relu: self.fc2_relu.clone(),
            fc3: self.fc3.clone(),
            fc3_relu: self.fc3_relu.clone(),
            fc4: self.fc4.clone(),
            fc4_relu: self.fc4_relu.clone(),
            deconv: self.deconv.clone(),
            deconv_relu: self.deconv_relu.clone(),
            sigmoid: self.sigmoid.clone(),
            forward_passes: AtomicU64::new(self.forward_passes.load(Ordering::Relaxed)),
        }
    }
}

/// Weight shape and bias length of every layer, in [`LAYER_NAMES`] order.
pub fn layer_shapes(c: &NetConfig) -> Vec<(Vec<usize>, usize)> {
    let b = c.base_size();
    let [c1, c2, c3] = c.conv_channels;
    let [d0, d1, d2] = c.decoder_channels;
    let out = c.output_channels();
    vec![
        (vec![c1, 1, 5, 5], c1),
        (vec![c2, c1, 5, 5], c2),
        (vec![c3, c2, 3, 3], c3),
        (vec![c.fc1_dim, c3 * b * b], c.fc1_dim),
        (vec![c.elev_dim, 1], c.elev_dim),
        (vec![c.elev_dim, c.elev_dim], c.elev_dim),
        (vec![c.code_dim, c.fc1_dim + c.elev_dim], c.code_dim),
        (vec![c.code_dim, c.code_dim], c.code_dim),
        (vec![d0 * b * b, c.code_dim], d0 * b * b),
        (vec![d0, d1, 4, 4], d1),
        (vec![d1, d2, 4, 4], d2),
        (vec![d2, out, 4, 4], out),
    ]
}

fn concat_cols<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, p, q) = (a.batch(), a.item_len(), b.item_len());
    if b.batch() != n {
        return Err(Error::shape(format!("concat batch {} vs {}", n, b.batch())));
    }
    let mut data = Vec::with_capacity(n * (p + q));
    for i in 0..n {
        data.extend_from_slice(a.item(i));
        data.extend_from_slice(b.item(i));
    }
    Tensor::from_vec(&[n, p + q], data)
}

fn split_cols<T: Real>(t: &Tensor<T>, p: usize) -> Result<(Tensor<T>, Tensor<T>)> {
    let (n, w) = (t.batch(), t.item_len());
    let mut a = Vec::with_capacity(n * p);
    let mut b = Vec::with_capacity(n * (w - p));
    for i in 0..n {
        a.extend_from_slice(&t.item(i)[..p]);
        b.extend_from_slice(&t.item(i)[p..]);
    }
    Ok((Tensor::from_vec(&[n, p], a)?, Tensor::from_vec(&[n, w - p], b)?))
}

impl<T: Real> ShapeCodeNet<T> {
    /// Uniform `±0.1` initialisation from the `Init` stream of `seed`.
    pub fn new(config: NetConfig, seed: u64) -> Result<Self> {
        Self::with_rng(config, &mut stream(seed, Stream::Init, 0))
    }

    pub fn with_rng<R: Rng + ?Sized>(config: NetConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut p = Vec::with_capacity(LAYER_NAMES.len());
        for (name, (w, b)) in LAYER_NAMES.iter().zip(layer_shapes(&config)) {
            p.push(LayerParams::uniform(*name, &w, b, rng)?);
        }
        let mut p = p.into_iter();
        let mut next = || p.next().expect("one parameter set per layer");
        Ok(ShapeCodeNet {
            conv: [Conv2d::new(next(), CONV_GEOMETRY[0]), Conv2d::new(next(), CONV_GEOMETRY[1]), Conv2d::new(next(), CONV_GEOMETRY[2])],
            conv_relu: Default::default(),
            fc1: Linear::new(next()),
            fc1_relu: Relu::new(),
            elev: [Linear::new(next()), Linear::new(next())],
            elev_relu: Default::default(),
            fc2: Linear::new(next()),
            fc2_relu: Relu::new(),
            fc3: Linear::new(next()),
            fc3_relu: Relu::new(),
            fc4: Linear::new(next()),
            fc4_relu: Relu::new(),
            deconv: [Deconv2d::new(next(), DECONV_GEOMETRY), Deconv2d::new(next(), DECONV_GEOMETRY), Deconv2d::new(next(), DECONV_GEOMETRY)],
            deconv_relu: Default::default(),
            sigmoid: Sigmoid::new(),
            forward_passes: AtomicU64::new(0),
            config,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    /// Parameters in [`LAYER_NAMES`] order.
    pub fn layers(&self) -> Vec<&LayerParams<T>> {
        let [c1, c2, c3] = &self.conv;
        let [e1, e2] = &self.elev;
        let [d1, d2, d3] = &self.deconv;
        vec![&c1.params, &c2.params, &c3.params, &self.fc1.params, &e1.params, &e2.params, &self.fc2.params, &self.fc3.params, &self.fc4.params, &d1.params, &d2.params, &d3.params]
    }

    pub fn layers_mut(&mut self) -> Vec<&mut LayerParams<T>> {
        let [c1, c2, c3] = &mut self.conv;
        let [e1, e2] = &mut self.elev;
        let [d1, d2, d3] = &mut self.deconv;
        vec![
            &mut c1.params,
            &mut c2.params,
            &mut c3.params,
            &mut self.fc1.params,
            &mut e1.params,
            &mut e2.params,
            &mut self.fc2.params,
            &mut self.fc3.params,
            &mut self.fc4.params,
            &mut d1.params,
            &mut d2.params,
            &mut d3.params,
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.layers().iter().map(|l| l.num_values()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.layers_mut().into_iter().for_each(LayerParams::zero_grad);
    }

    pub fn reset_velocity(&mut self) {
        self.layers_mut().into_iter().for_each(LayerParams::reset_velocity);
    }

    /// Copies parameter values (not gradients or velocities) from `other`.
    pub fn load_from(&mut self, other: &ShapeCodeNet<T>) -> Result<()> {
        if other.config != self.config {
            return Err(Error::invalid("network configurations differ"));
        }
        for (dst, src) in self.layers_mut().into_iter().zip(other.layers()) {
            dst.load(src.weight.clone(), src.bias.clone())?;
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ShapeCodeNet<U> {
        let mut out = ShapeCodeNet::<U>::with_rng(self.config.clone(), &mut stream(0, Stream::Aux, 0)).expect("validated config");
        for (dst, src) in out.layers_mut().into_iter().zip(self.layers()) {
            *dst = src.cast();
        }
        out
    }

    /// Encoder/decoder evaluations performed by the pure inference paths,
    /// counted per example.
    pub fn forward_passes(&self) -> u64 {
        self.forward_passes.load(Ordering::Relaxed)
    }

    /// `[B, 1]` elevation-sensor input.
    pub fn elevation_input(elevations_deg: &[f64]) -> Tensor<T> {
        let data = elevations_deg.iter().map(|&e| T::of(e / ELEVATION_SCALE)).collect();
        Tensor::from_vec(&[elevations_deg.len(), 1], data).expect("length matches")
    }

    fn check_input(&self, images: &Tensor<T>, elevations: &Tensor<T>) -> Result<()> {
        let h = self.config.image_size;
        if images.rank() != 4 || images.shape()[1..] != [1, h, h] {
            return Err(Error::shape(format!("expected images [B, 1, {h}, {h}], got {:?}", images.shape())));
        }
        if elevations.shape() != [images.batch(), 1] {
            return Err(Error::shape(format!("expected elevations [{}, 1], got {:?}", images.batch(), elevations.shape())));
        }
        Ok(())
    }

    /// Encoder without caching. `elevations` is the `[B, 1]` scaled input.
    pub fn encode(&self, images: &Tensor<T>, elevations: &Tensor<T>) -> Result<Features<T>> {
        self.check_input(images, elevations)?;
        let mut x = images.clone();
        for (conv, relu) in self.conv.iter().zip(&self.conv_relu) {
            x = relu.infer(&conv.infer(&x)?)?;
        }
        let n = x.batch();
        let x = x.reshape(&[n, self.fc1.params.weight.shape()[1]])?;
        let fc1 = self.fc1_relu.infer(&self.fc1.infer(&x)?)?;
        let mut e = elevations.clone();
        for (lin, relu) in self.elev.iter().zip(&self.elev_relu) {
            e = relu.infer(&lin.infer(&e)?)?;
        }
        let cat = concat_cols(&fc1, &e)?;
        let fc2 = self.fc2_relu.infer(&self.fc2.infer(&cat)?)?;
        let fc3 = self.fc3_relu.infer(&self.fc3.infer(&fc2)?)?;
        Ok(Features { fc1, fc2, fc3 })
    }

    /// Decoder without caching: `[B, D]` codes to `[B, C, H, W]` maps in `(0, 1)`.
    pub fn decode(&self, code: &Tensor<T>) -> Result<Tensor<T>> {
        if code.rank() != 2 || code.item_len() != self.config.code_dim {
            return Err(Error::shape(format!("expected codes [B, {}], got {:?}", self.config.code_dim, code.shape())));
        }
        let b = self.config.base_size();
        let x = self.fc4_relu.infer(&self.fc4.infer(code)?)?;
        let mut x = x.reshape(&[code.batch(), self.config.decoder_channels[0], b, b])?;
        for (deconv, relu) in self.deconv.iter().zip(&self.deconv_relu) {
            x = relu.infer(&deconv.infer(&x)?)?;
        }
        self.sigmoid.infer(&self.deconv[2].infer(&x)?)
    }

    /// Encode then decode, once per example.
    pub fn infer(&self, images: &Tensor<T>, elevations: &Tensor<T>) -> Result<Tensor<T>> {
        let out = self.decode(&self.encode(images, elevations)?.fc3)?;
        self.forward_passes.fetch_add(images.batch() as u64, Ordering::Relaxed);
        Ok(out)
    }

    /// One-shot viewgrid prediction from a single `H×W` view. The observed
    /// view lands in azimuth column 0 (relative variant).
    pub fn predict_viewgrid(&self, image: &[T], elevation_deg: f64) -> Result<Viewgrid<T>> {
        if self.config.variant == Variant::Autoencoder {
            return Err(Error::invalid("the autoencoder does not predict viewgrids"));
        }
        let h = self.config.image_size;
        let x = Tensor::from_vec(&[1, 1, h, h], image.to_vec())?;
        let out = self.infer(&x, &Self::elevation_input(&[elevation_deg]))?;
        Viewgrid::new(self.config.spec()?, h, h, out.into_data())
    }

    /// Encoder activations with the elevation input forced to 0°.
    pub fn extract_features(&self, images: &Tensor<T>) -> Result<Features<T>> {
        let zeros = Tensor::zeros(&[images.batch(), 1]);
        self.encode(images, &zeros)
    }

    /// Training forward pass: caches activations for [`Self::backward`].
    pub fn forward(&mut self, images: &Tensor<T>, elevations: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(images, elevations)?;
        let mut x = images.clone();
        for (conv, relu) in self.conv.iter_mut().zip(&mut self.conv_relu) {
            x = relu.forward(&conv.forward(&x)?)?;
        }
        let n = x.batch();
        let x = x.reshape(&[n, self.fc1.params.weight.shape()[1]])?;
        let fc1 = self.fc1_relu.forward(&self.fc1.forward(&x)?)?;
        let mut e = elevations.clone();
        for (lin, relu) in self.elev.iter_mut().zip(&mut self.elev_relu) {
            e = relu.forward(&lin.forward(&e)?)?;
        }
        let cat = concat_cols(&fc1, &e)?;
        let fc2 = self.fc2_relu.forward(&self.fc2.forward(&cat)?)?;
        let code = self.fc3_relu.forward(&self.fc3.forward(&fc2)?)?;
        let b = self.config.base_size();
        let x = self.fc4_relu.forward(&self.fc4.forward(&code)?)?;
        let mut x = x.reshape(&[n, self.config.decoder_channels[0], b, b])?;
        for (deconv, relu) in self.deconv.iter_mut().zip(&mut self.deconv_relu) {
            x = relu.forward(&deconv.forward(&x)?)?;
        }
        self.sigmoid.forward(&self.deconv[2].forward(&x)?)
    }

    /// Accumulates parameter gradients for `d loss / d output`.
    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<()> {
        let mut g = self.deconv[2].backward(&self.sigmoid.backward(grad_out)?)?;
        for (deconv, relu) in self.deconv[..2].iter_mut().zip(&mut self.deconv_relu).rev() {
            g = deconv.backward(&relu.backward(&g)?)?;
        }
        let (n, len) = (g.batch(), g.item_len());
        let g = g.reshape(&[n, len])?;
        let g = self.fc4.backward(&self.fc4_relu.backward(&g)?)?;
        let g = self.fc3.backward(&self.fc3_relu.backward(&g)?)?;
        let g = self.fc2.backward(&self.fc2_relu.backward(&g)?)?;
        let (g_img, mut g_elev) = split_cols(&g, self.config.fc1_dim)?;
        for (lin, relu) in self.elev.iter_mut().zip(&mut self.elev_relu).rev() {
            g_elev = lin.backward(&relu.backward(&g_elev)?)?;
        }
        let g = self.fc1.backward(&self.fc1_relu.backward(&g_img)?)?;
        let b = self.config.base_size();
        let mut g = g.reshape(&[n, self.config.conv_channels[2], b, b])?;
        for (conv, relu) in self.conv.iter_mut().zip(&mut self.conv_relu).rev() {
            g = conv.backward(&relu.backward(&g)?)?;
        }
        Ok(())
    }

    /// Drops cached activations.
    pub fn clear_cache(&mut self) {
        self.conv.iter_mut().for_each(|l| l.clear_cache());
        self.conv_relu.iter_mut().for_each(|l| l.clear_cache());
        self.fc1.clear_cache();
        self.fc1_relu.clear_cache();
        self.elev.iter_mut().for_each(|l| l.clear_cache());
        self.elev_relu.iter_mut().for_each(|l| l.clear_cache());
        for (l, r) in [(&mut self.fc2, &mut self.fc2_relu), (&mut self.fc3, &mut self.fc3_relu), (&mut self.fc4, &mut self.fc4_relu)] {
            l.clear_cache();
            r.clear_cache();
        }
        self.deconv.iter_mut().for_each(|l| l.clear_cache());
        self.deconv_relu.iter_mut().for_each(|l| l.clear_cache());
        self.sigmoid.clear_cache();
    }

    /// Sign fingerprint of every ReLU input in the last cached forward pass.
    pub(crate) fn relu_region(&self) -> u64 {
        use crate::ndtensor::gradcheck::{region_hash, REGION_SEED};
        let mut acc = REGION_SEED;
        let relus = self.conv_relu.iter().chain([&self.fc1_relu]).chain(&self.elev_relu).chain([&self.fc2_relu, &self.fc3_relu, &self.fc4_relu]).chain(&self.deconv_relu);
        for r in relus {
            if let Some(out) = r.output() {
                acc = region_hash(acc, &out.cast::<f64>());
            }
        }
        acc
    }
}
