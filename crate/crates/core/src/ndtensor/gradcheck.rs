//! Central finite-difference verification of analytic gradients.

use super::Tensor;
use crate::error::Result;

/// Loss value plus a fingerprint of the piecewise-linear region (e.g. the
/// ReLU on/off pattern) the evaluation landed in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub region: u64,
}

/// A scalar function of a set of tensors whose gradients can be checked.
pub trait Objective {
    /// Names of the checked tensors, in index order.
    fn tensor_names(&self) -> Vec<String>;
    fn tensor_mut(&mut self, index: usize) -> &mut Tensor<f64>;
    /// Loss at the current tensor values.
    fn evaluate(&mut self) -> Result<Evaluation>;
    /// Analytic gradient of the loss for every checked tensor.
    fn gradients(&mut self) -> Result<Vec<Tensor<f64>>>;
}

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    /// Relative error is `|a - n| / max(|a|, |n|, floor)`. The floor keeps
    /// round-off in `L(x±h)` (about `1e-16·|L| / h`) from dominating the
    /// ratio on near-zero gradients.
    pub floor: f64,
    pub tolerance: f64,
    /// Check at most this many evenly spaced coordinates per tensor.
    pub max_coords: Option<usize>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig { step: 1e-5, floor: 1e-6, tolerance: 1e-4, max_coords: None }
    }
}

#[derive(Clone, Debug)]
pub struct TensorReport {
    pub name: String,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
    /// Coordinates whose ±step probes fell in different activation regions
    /// (the loss is not differentiable there).
    pub skipped: usize,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorReport>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tolerance && self.tensors.iter().all(|t| t.checked > 0)
    }

    pub fn checked(&self) -> usize {
        self.tensors.iter().map(|t| t.checked).sum()
    }

    /// One line per tensor: name, checked, skipped, max relative and absolute error.
    pub fn to_table(&self) -> String {
        let mut s = String::from("tensor\tchecked\tskipped\tmax_rel_error\tmax_abs_error\n");
        for t in &self.tensors {
            s.push_str(&format!("{}\t{}\t{}\t{:.3e}\t{:.3e}\n", t.name, t.checked, t.skipped, t.max_rel_error, t.max_abs_error));
        }
        s
    }
}

/// Compares analytic gradients against `(L(x+h) - L(x-h)) / 2h` per coordinate.
pub fn grad_check<O: Objective + ?Sized>(obj: &mut O, config: &GradCheckConfig) -> Result<GradCheckReport> {
    let names = obj.tensor_names();
    let analytic = obj.gradients()?;
    let base = obj.evaluate()?;
    let h = config.step;
    let mut tensors = Vec::with_capacity(names.len());
    for (index, name) in names.into_iter().enumerate() {
        let len = obj.tensor_mut(index).len();
        let stride = match config.max_coords {
            Some(m) if m > 0 && len > m => len.div_ceil(m),
            _ => 1,
        };
        let mut report = TensorReport { name, max_rel_error: 0.0, max_abs_error: 0.0, checked: 0, skipped: 0 };
        for i in (0..len).step_by(stride) {
            let orig = obj.tensor_mut(index).data()[i];
            obj.tensor_mut(index).data_mut()[i] = orig + h;
            let plus = obj.evaluate()?;
            obj.tensor_mut(index).data_mut()[i] = orig - h;
            let minus = obj.evaluate()?;
            obj.tensor_mut(index).data_mut()[i] = orig;
            if plus.region != base.region || minus.region != base.region {
                report.skipped += 1;
                continue;
            }
            let numeric = (plus.loss - minus.loss) / (2.0 * h);
            let a = analytic[index].data()[i];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(config.floor);
            report.max_abs_error = report.max_abs_error.max(abs);
            report.max_rel_error = report.max_rel_error.max(rel);
            report.checked += 1;
        }
        tensors.push(report);
    }
    Ok(GradCheckReport { tensors, tolerance: config.tolerance })
}

/// FNV-1a over the sign pattern of a tensor (positive vs non-positive).
pub fn region_hash(mut acc: u64, t: &Tensor<f64>) -> u64 {
    for &v in t.data() {
        acc ^= (v > 0.0) as u64;
        acc = acc.wrapping_mul(0x100_0000_01b3);
    }
    acc
}

/// Starting value for [`region_hash`].
pub const REGION_SEED: u64 = 0xcbf2_9ce4_8422_2325;
