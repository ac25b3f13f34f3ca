//! Finite-difference objectives for single layers: `loss = Σ layer(x) ⊙ R`
//! with a fixed random probe `R` (for the MSE kind, the loss itself).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::gradcheck::{region_hash, Evaluation, Objective, REGION_SEED};
use super::*;
use crate::error::Result;
use crate::rng::{stream, Stream};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerKind {
    Conv(ConvGeometry),
    Deconv(ConvGeometry),
    Linear,
    Relu,
    Sigmoid,
    Mse,
}

impl LayerKind {
    /// One representative of every differentiable stage the network uses.
    pub fn all() -> Vec<(&'static str, LayerKind)> {
        vec![
            ("conv_k3_s1_p1", LayerKind::Conv(ConvGeometry::new(3, 1, 1))),
            ("conv_k5_s2_p2", LayerKind::Conv(ConvGeometry::new(5, 2, 2))),
            ("conv_k3_s2_p1", LayerKind::Conv(ConvGeometry::new(3, 2, 1))),
            ("deconv_k4_s2_p1", LayerKind::Deconv(ConvGeometry::new(4, 2, 1))),
            ("linear", LayerKind::Linear),
            ("relu", LayerKind::Relu),
            ("sigmoid", LayerKind::Sigmoid),
            ("mse", LayerKind::Mse),
        ]
    }
}

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let len = shape.iter().product();
    Tensor::from_vec(shape, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("shape matches length")
}

fn random_params(name: &str, w: &[usize], b: usize, rng: &mut ChaCha8Rng) -> LayerParams<f64> {
    LayerParams::new(name, random_tensor(w, rng), random_tensor(&[b], rng))
}

pub struct LayerObjective {
    pub kind: LayerKind,
    pub input: Tensor<f64>,
    pub params: Option<LayerParams<f64>>,
    /// Random weighting of the output (the target, for [`LayerKind::Mse`]).
    pub probe: Tensor<f64>,
    /// Perturbs the analytic input gradient; negative control for the checker.
    pub corrupt: bool,
}

impl LayerObjective {
    /// Random instance `instance` drawn from `(seed, Aux)`.
    pub fn random(kind: LayerKind, seed: u64, instance: u32) -> Self {
        let mut r = stream(seed, Stream::Aux, 100 + instance);
        let (input, params) = match kind {
            LayerKind::Conv(g) => {
                let x = random_tensor(&[2, 2, 6, 6], &mut r);
                (x, Some(random_params("conv", &[3, 2, g.kernel, g.kernel], 3, &mut r)))
            }
            LayerKind::Deconv(g) => {
                let x = random_tensor(&[2, 3, 3, 3], &mut r);
                (x, Some(random_params("deconv", &[3, 2, g.kernel, g.kernel], 2, &mut r)))
            }
            LayerKind::Linear => (random_tensor(&[3, 5], &mut r), Some(random_params("fc", &[4, 5], 4, &mut r))),
            LayerKind::Relu | LayerKind::Sigmoid | LayerKind::Mse => (random_tensor(&[3, 7], &mut r), None),
        };
        let mut obj = LayerObjective { kind, input, params, probe: Tensor::zeros(&[1]), corrupt: false };
        let shape = obj.output().shape().to_vec();
        obj.probe = random_tensor(&shape, &mut r);
        obj
    }

    fn output(&self) -> Tensor<f64> {
        match (&self.kind, &self.params) {
            (LayerKind::Conv(g), Some(p)) => conv2d_forward(&self.input, p, *g).expect("valid instance"),
            (LayerKind::Deconv(g), Some(p)) => deconv2d_forward(&self.input, p, *g).expect("valid instance"),
            (LayerKind::Linear, Some(p)) => linear_forward(&self.input, p).expect("valid instance"),
            (LayerKind::Relu, _) => relu_forward(&self.input),
            (LayerKind::Sigmoid, _) => sigmoid_forward(&self.input),
            (LayerKind::Mse, _) => self.input.clone(),
            _ => unreachable!("parametric kind without parameters"),
        }
    }
}

impl Objective for LayerObjective {
    fn tensor_names(&self) -> Vec<String> {
        if self.params.is_some() {
            vec!["input".into(), "weight".into(), "bias".into()]
        } else {
            vec!["input".into()]
        }
    }

    fn tensor_mut(&mut self, index: usize) -> &mut Tensor<f64> {
        match index {
            0 => &mut self.input,
            1 => &mut self.params.as_mut().expect("parametric").weight,
            _ => &mut self.params.as_mut().expect("parametric").bias,
        }
    }

    fn evaluate(&mut self) -> Result<Evaluation> {
        let y = self.output();
        let loss = match self.kind {
            LayerKind::Mse => mse_mean(&y, &self.probe)?,
            _ => y.data().iter().zip(self.probe.data()).map(|(a, b)| a * b).sum(),
        };
        let region = match self.kind {
            LayerKind::Relu => region_hash(REGION_SEED, &self.input),
            _ => 0,
        };
        Ok(Evaluation { loss, region })
    }

    fn gradients(&mut self) -> Result<Vec<Tensor<f64>>> {
        let y = self.output();
        let probe = self.probe.clone();
        let input = self.input.clone();
        let mut gi = match (&self.kind, self.params.as_mut()) {
            (LayerKind::Conv(g), Some(p)) => {
                p.zero_grad();
                conv2d_backward(&probe, &input, p, *g)?
            }
            (LayerKind::Deconv(g), Some(p)) => {
                p.zero_grad();
                deconv2d_backward(&probe, &input, p, *g)?
            }
            (LayerKind::Linear, Some(p)) => {
                p.zero_grad();
                linear_backward(&probe, &input, p)?
            }
            (LayerKind::Relu, _) => relu_backward(&probe, &y)?,
            (LayerKind::Sigmoid, _) => sigmoid_backward(&probe, &y)?,
            (LayerKind::Mse, _) => mse_mean_grad(&y, &probe)?,
            _ => unreachable!("parametric kind without parameters"),
        };
        if self.corrupt {
            gi.data_mut()[0] *= 1.01;
        }
        let mut out = vec![gi];
        if let Some(p) = &self.params {
            out.push(p.weight_grad.clone());
            out.push(p.bias_grad.clone());
        }
        Ok(out)
    }
}
