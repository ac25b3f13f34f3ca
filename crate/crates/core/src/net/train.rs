//! Minibatch SGD with validation-based early stopping and a learning-rate sweep.

use rand::seq::SliceRandom;
use rand::Rng;

use super::config::{NetConfig, TrainConfig, Variant};
use super::model::ShapeCodeNet;
use crate::error::{Error, Result};
use crate::ndtensor::{mse_mean, mse_mean_grad, sgd_momentum_step, OptimizerConfig, Tensor};
use crate::rng::{stream, Stream};
use crate::scalar::Real;
use crate::shapeforge::{Dataset, Split};
use crate::viewgrid::{alignment_loss, masked_loss, ViewIndex, Viewgrid};

/// One training or validation example: an object and its observed view.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Example {
    pub object: usize,
    pub view: ViewIndex,
}

/// Input images `[B, 1, H, W]` and scaled elevations `[B, 1]` for a batch.
pub fn batch_inputs<T: Real>(ds: &Dataset, batch: &[Example]) -> Result<(Tensor<T>, Tensor<T>)> {
    let h = ds.image_size;
    let mut pixels = Vec::with_capacity(batch.len() * h * h);
    let mut elev = Vec::with_capacity(batch.len());
    for ex in batch {
        pixels.extend(ds.view::<T>(ex.object, ex.view));
        elev.push(ds.spec.elevation_degrees(ex.view.elev_row));
    }
    Ok((Tensor::from_vec(&[batch.len(), 1, h, h], pixels)?, ShapeCodeNet::<T>::elevation_input(&elev)))
}

/// Loss of one prediction (`pred` = one batch item of the decoder output).
/// Returns the loss and, if asked, its gradient with respect to `pred`.
pub fn example_loss<T: Real>(variant: Variant, ds: &Dataset, ex: Example, pred: &[T], with_grad: bool) -> Result<(f64, Option<Vec<T>>)> {
    let h = ds.image_size;
    match variant.alignment() {
        Some(mode) => {
            let gt: Viewgrid<T> = ds.viewgrid(ex.object);
            let p = Viewgrid::new(ds.spec.clone(), h, h, pred.to_vec())?;
            if with_grad {
                let (loss, grad) = masked_loss(&p, &gt, ex.view, mode, &vec![true; ds.spec.num_views()])?;
                Ok((loss.to_f64_lossy(), Some(grad)))
            } else {
                Ok((alignment_loss(&p, &gt, ex.view, mode)?.to_f64_lossy(), None))
            }
        }
        None => {
            let target = Tensor::from_vec(&[h * h], ds.view::<T>(ex.object, ex.view))?;
            let p = Tensor::from_vec(&[h * h], pred.to_vec())?;
            let loss = mse_mean(&p, &target)?.to_f64_lossy();
            let grad = if with_grad { Some(mse_mean_grad(&p, &target)?.into_data()) } else { None };
            Ok((loss, grad))
        }
    }
}

/// Mean loss over `examples`, evaluated in batches without caching.
pub fn evaluate_loss<T: Real>(net: &ShapeCodeNet<T>, ds: &Dataset, examples: &[Example], batch_size: usize) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Empty("no examples to evaluate".into()));
    }
    let mut total = 0.0;
    for batch in examples.chunks(batch_size.max(1)) {
        let (x, e) = batch_inputs::<T>(ds, batch)?;
        let out = net.infer(&x, &e)?;
        for (b, ex) in batch.iter().enumerate() {
            total += example_loss(net.config().variant, ds, *ex, out.item(b), false)?.0;
        }
    }
    Ok(total / examples.len() as f64)
}

/// One SGD step on a minibatch; returns the batch-mean loss.
pub fn train_step<T: Real>(net: &mut ShapeCodeNet<T>, ds: &Dataset, batch: &[Example], opt: &OptimizerConfig) -> Result<f64> {
    let (x, e) = batch_inputs::<T>(ds, batch)?;
    let mut out = net.forward(&x, &e)?;
    let scale = T::of(1.0 / batch.len() as f64);
    let mut total = 0.0;
    for (b, ex) in batch.iter().enumerate() {
        let (loss, grad) = example_loss(net.config().variant, ds, *ex, out.item(b), true)?;
        total += loss;
        for (o, g) in out.item_mut(b).iter_mut().zip(grad.expect("requested")) {
            *o = g * scale;
        }
    }
    let loss = total / batch.len() as f64;
    if !loss.is_finite() {
        net.clear_cache();
        return Err(Error::NonFinite(format!("training loss {loss}")));
    }
    net.backward(&out)?;
    net.clear_cache();
    sgd_momentum_step(net.layers_mut(), opt)?;
    Ok(loss)
}

/// Fixed validation examples: `per_object` uniformly drawn views per object.
pub fn validation_examples(ds: &Dataset, objects: &[usize], per_object: usize, seed: u64) -> Vec<Example> {
    let mut rng = stream(seed, Stream::Validation, 0);
    let v = ds.spec.num_views();
    objects.iter().flat_map(|&o| (0..per_object).map(|_| (o, rng.gen_range(0..v))).collect::<Vec<_>>()).map(|(object, f)| Example { object, view: ds.spec.index(f) }).collect()
}

/// Training order and observed views for one epoch.
pub fn epoch_examples(ds: &Dataset, objects: &[usize], seed: u64, epoch: usize) -> Vec<Example> {
    let mut rng = stream(seed, Stream::Epoch, epoch as u32);
    let mut order = objects.to_vec();
    order.shuffle(&mut rng);
    let v = ds.spec.num_views();
    order.into_iter().map(|object| Example { object, view: ds.spec.index(rng.gen_range(0..v)) }).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub lr: f64,
    pub epoch: usize,
    /// Optimisation steps taken so far in this run.
    pub step: usize,
    /// Mean minibatch loss since the previous row.
    pub train_loss: f64,
    pub val_loss: f64,
    /// Validation improved on this row.
    pub best: bool,
    /// These are the returned parameters.
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LrResult {
    pub lr: f64,
    /// `None` if the run diverged.
    pub best_val: Option<f64>,
    pub steps: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
    pub runs: Vec<LrResult>,
}

impl TrainLog {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("lr\tepoch\tstep\ttrain_loss\tval_loss\tbest\tselected\n");
        for r in &self.rows {
            s.push_str(&format!("{}\t{}\t{}\t{:.9}\t{:.9}\t{}\t{}\n", r.lr, r.epoch, r.step, r.train_loss, r.val_loss, r.best as u8, r.selected as u8));
        }
        for r in &self.runs {
            if r.best_val.is_none() {
                s.push_str(&format!("{}\t-\t{}\tdiverged\tdiverged\t0\t0\n", r.lr, r.steps));
            }
        }
        s
    }

    pub fn selected(&self) -> Option<&LogRow> {
        self.rows.iter().find(|r| r.selected)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T: Real> {
    pub net: ShapeCodeNet<T>,
    pub log: TrainLog,
    pub learning_rate: f64,
    pub val_loss: f64,
}

/// Trains one network per learning rate and keeps the best by validation loss.
pub fn train<T: Real>(ds: &Dataset, net_cfg: &NetConfig, cfg: &TrainConfig) -> Result<TrainOutcome<T>> {
    train_with_progress(ds, net_cfg, cfg, &mut |_| {})
}

/// [`train`], calling `progress` after every validation evaluation.
pub fn train_with_progress<T: Real>(ds: &Dataset, net_cfg: &NetConfig, cfg: &TrainConfig, progress: &mut dyn FnMut(&LogRow)) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    net_cfg.validate()?;
    if net_cfg.spec()? != ds.spec || net_cfg.image_size != ds.image_size {
        return Err(Error::invalid("network grid or image size does not match the dataset"));
    }
    let train_objs = ds.indices(Split::Train);
    let val_objs = ds.indices(Split::Val);
    if train_objs.is_empty() || val_objs.is_empty() {
        return Err(Error::Empty("training needs non-empty train and val splits".into()));
    }
    let val = validation_examples(ds, &val_objs, cfg.val_views_per_object, cfg.seed);
    let bs = cfg.optimizer.batch_size;

    let mut log = TrainLog::default();
    let mut winner: Option<(ShapeCodeNet<T>, f64, f64, usize)> = None;
    for &lr in &cfg.lr_grid {
        let opt = OptimizerConfig { learning_rate: lr, ..cfg.optimizer.clone() };
        let mut net = ShapeCodeNet::<T>::new(net_cfg.clone(), cfg.seed)?;
        let mut best = net.clone();
        let mut best_val = f64::INFINITY;
        let mut best_row = None;
        let mut stale = 0;
        let mut step = 0;
        let mut diverged = false;
        let (mut loss_sum, mut loss_count) = (0.0, 0usize);

        let mut validate = |net: &ShapeCodeNet<T>, epoch: usize, step: usize, loss_sum: &mut f64, loss_count: &mut usize, log: &mut TrainLog| -> Result<bool> {
            let v = evaluate_loss(net, ds, &val, bs)?;
            let improved = v < best_val;
            let row = LogRow { lr, epoch, step, train_loss: *loss_sum / (*loss_count).max(1) as f64, val_loss: v, best: improved, selected: false };
            progress(&row);
            log.rows.push(row);
            *loss_sum = 0.0;
            *loss_count = 0;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("validation loss {v}")));
            }
            if improved {
                best_val = v;
                best.load_from(net)?;
                best_row = Some(log.rows.len() - 1);
                stale = 0;
            } else {
                stale += 1;
            }
            Ok(stale >= cfg.patience)
        };

        'epochs: for epoch in 0..cfg.max_epochs {
            for batch in epoch_examples(ds, &train_objs, cfg.seed, epoch).chunks(bs) {
                match train_step(&mut net, ds, batch, &opt) {
                    Ok(l) => {
                        loss_sum += l;
                        loss_count += 1;
                    }
                    Err(Error::NonFinite(_)) => {
                        diverged = true;
                        break 'epochs;
                    }
                    Err(e) => return Err(e),
                }
                step += 1;
                if cfg.val_interval > 0 && step % cfg.val_interval == 0 {
                    match validate(&net, epoch, step, &mut loss_sum, &mut loss_count, &mut log) {
                        Ok(true) => break 'epochs,
                        Ok(false) => {}
                        Err(Error::NonFinite(_)) => {
                            diverged = true;
                            break 'epochs;
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            if cfg.val_interval == 0 {
                match validate(&net, epoch, step, &mut loss_sum, &mut loss_count, &mut log) {
                    Ok(true) => break,
                    Ok(false) => {}
                    Err(Error::NonFinite(_)) => {
                        diverged = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        }

        log.runs.push(LrResult { lr, best_val: (!diverged).then_some(best_val), steps: step });
        if diverged {
            continue;
        }
        if winner.as_ref().is_none_or(|w| best_val < w.1) {
            let row = best_row.expect("a finite validation loss was recorded");
            winner = Some((best, best_val, lr, row));
        }
    }

    let (mut net, val_loss, learning_rate, row) = winner.ok_or_else(|| Error::NonFinite("every learning rate diverged".into()))?;
    log.rows[row].selected = true;
    net.reset_velocity();
    net.zero_grad();
    Ok(TrainOutcome { net, log, learning_rate, val_loss })
}
