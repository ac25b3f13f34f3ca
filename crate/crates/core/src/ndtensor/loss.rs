use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

fn check<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<()> {
    if !pred.same_shape(target) {
        return Err(Error::shape(format!("mse: pred {:?} vs target {:?}", pred.shape(), target.shape())));
    }
    if pred.is_empty() {
        return Err(Error::Empty("mse over zero elements".into()));
    }
    Ok(())
}

/// Mean over all elements of `(pred - target)^2`, summed in index order.
pub fn mse_mean<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<T> {
    check(pred, target)?;
    let mut acc = T::zero();
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let d = p - t;
        acc += d * d;
    }
    Ok(acc / T::of(pred.len() as f64))
}

/// `d mse_mean / d pred = 2 (pred - target) / count`.
pub fn mse_mean_grad<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<Tensor<T>> {
    check(pred, target)?;
    let scale = T::of(2.0 / pred.len() as f64);
    let data = pred.data().iter().zip(target.data()).map(|(&p, &t)| (p - t) * scale).collect();
    Tensor::from_vec(pred.shape(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_cases() {
        let p = Tensor::<f64>::full(&[2, 3], 0.5);
        let z = Tensor::<f64>::zeros(&[2, 3]);
        assert_eq!(mse_mean(&p, &p).unwrap(), 0.0);
        assert_eq!(mse_mean(&p, &z).unwrap(), 0.25);
        let g = mse_mean_grad(&p, &z).unwrap();
        assert!(g.data().iter().all(|&v| (v - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn matches_loop_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::stream(3, crate::rng::Stream::Aux, 0);
        let a: Vec<f64> = (0..37).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..37).map(|_| rng.gen()).collect();
        let mut s = 0.0;
        for i in 0..37 {
            s += (a[i] - b[i]) * (a[i] - b[i]);
        }
        let got = mse_mean(&Tensor::from_vec(&[37], a).unwrap(), &Tensor::from_vec(&[37], b).unwrap()).unwrap();
        assert!((got - s / 37.0).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_errors() {
        let a = Tensor::<f32>::zeros(&[2, 2]);
        let b = Tensor::<f32>::zeros(&[4]);
        assert!(matches!(mse_mean(&a, &b), Err(Error::Shape(_))));
    }
}
