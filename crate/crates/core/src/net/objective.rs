//! End-to-end finite-difference objective: the full training loss of a
//! miniature 64-bit network as a function of every parameter tensor.

use rand::Rng;

use super::config::{NetConfig, Variant};
use super::model::ShapeCodeNet;
use crate::error::Result;
use crate::ndtensor::{mse_mean, mse_mean_grad, Evaluation, Objective, Tensor};
use crate::rng::{stream, Stream};
use crate::viewgrid::{masked_loss, sample_view_sphere, ViewIndex, Viewgrid};

/// Initialisation range for checked networks; wider than training's so
/// that few ReLUs start dead and the gradients are not trivially zero.
const CHECK_INIT: f64 = 0.5;

pub struct NetObjective {
    pub net: ShapeCodeNet<f64>,
    pub images: Tensor<f64>,
    pub elevations_deg: Vec<f64>,
    pub targets: Vec<Viewgrid<f64>>,
    pub observed: Vec<ViewIndex>,
}

impl NetObjective {
    /// Random miniature instance: 8×8 views on a 2×3 grid, batch of 2.
    pub fn random(variant: Variant, seed: u64, instance: u32) -> Result<Self> {
        let spec = sample_view_sphere(3, &[0, 30])?;
        let cfg = NetConfig::miniature(&spec, variant);
        let mut rng = stream(seed, Stream::Aux, 1000 + instance);
        let mut net = ShapeCodeNet::<f64>::with_rng(cfg, &mut rng)?;
        for l in net.layers_mut() {
            for v in l.weight.data_mut().iter_mut().chain(l.bias.data_mut()) {
                *v = rng.gen_range(-CHECK_INIT..CHECK_INIT);
            }
        }
        let b = 2;
        let h = 8;
        let images = Tensor::from_vec(&[b, 1, h, h], (0..b * h * h).map(|_| rng.gen_range(0.0..1.0)).collect())?;
        let observed: Vec<ViewIndex> = (0..b).map(|_| spec.index(rng.gen_range(0..spec.num_views()))).collect();
        let elevations_deg = observed.iter().map(|o| spec.elevation_degrees(o.elev_row)).collect();
        let targets = (0..b)
            .map(|_| Viewgrid::new(spec.clone(), h, h, (0..spec.num_views() * h * h).map(|_| rng.gen_range(0.0..1.0)).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(NetObjective { net, images, elevations_deg, targets, observed })
    }

    /// Forward with caches; returns the batch-mean loss and `d loss / d output`.
    fn loss_and_grad(&mut self) -> Result<(f64, Tensor<f64>)> {
        let e = ShapeCodeNet::<f64>::elevation_input(&self.elevations_deg);
        let mut out = self.net.forward(&self.images, &e)?;
        let b = out.batch();
        let h = self.net.config().image_size;
        let mut total = 0.0;
        for i in 0..b {
            let (loss, grad) = match self.net.config().variant.alignment() {
                Some(mode) => {
                    let gt = &self.targets[i];
                    let pred = Viewgrid::new(gt.spec().clone(), h, h, out.item(i).to_vec())?;
                    masked_loss(&pred, gt, self.observed[i], mode, &vec![true; gt.spec().num_views()])?
                }
                None => {
                    let p = Tensor::from_vec(&[h * h], out.item(i).to_vec())?;
                    let t = Tensor::from_vec(&[h * h], self.images.item(i).to_vec())?;
                    (mse_mean(&p, &t)?, mse_mean_grad(&p, &t)?.into_data())
                }
            };
            total += loss;
            for (o, g) in out.item_mut(i).iter_mut().zip(grad) {
                *o = g / b as f64;
            }
        }
        Ok((total / b as f64, out))
    }
}

impl Objective for NetObjective {
    fn tensor_names(&self) -> Vec<String> {
        self.net.layers().iter().flat_map(|l| [format!("{}.weight", l.name), format!("{}.bias", l.name)]).collect()
    }

    fn tensor_mut(&mut self, index: usize) -> &mut Tensor<f64> {
        let l = self.net.layers_mut().into_iter().nth(index / 2).expect("tensor index in range");
        if index % 2 == 0 {
            &mut l.weight
        } else {
            &mut l.bias
        }
    }

    fn evaluate(&mut self) -> Result<Evaluation> {
        let (loss, _) = self.loss_and_grad()?;
        let region = self.net.relu_region();
        self.net.clear_cache();
        Ok(Evaluation { loss, region })
    }

    fn gradients(&mut self) -> Result<Vec<Tensor<f64>>> {
        self.net.zero_grad();
        let (_, grad) = self.loss_and_grad()?;
        self.net.backward(&grad)?;
        self.net.clear_cache();
        Ok(self.net.layers().iter().flat_map(|l| [l.weight_grad.clone(), l.bias_grad.clone()]).collect())
    }
}
