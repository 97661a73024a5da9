//! Central finite-difference verification of analytic gradients.

use super::matrix::Matrix;
use super::network::MlpNetwork;
use crate::error::Result;

/// Below this magnitude the comparison falls back to absolute error.
pub const ABS_FALLBACK: f64 = 1e-8;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    let scale = analytic.abs().max(numeric.abs());
    if scale < ABS_FALLBACK {
        diff
    } else {
        diff / scale
    }
}

/// A scalar loss on a network output, with its gradient.
pub trait ScalarLoss {
    fn value(&self, output: &Matrix) -> f64;
    fn gradient(&self, output: &Matrix) -> Matrix;
}

/// `½‖y − target‖²`
pub struct Quadratic(pub Matrix);

impl ScalarLoss for Quadratic {
    fn value(&self, y: &Matrix) -> f64 {
        0.5 * y
            .data()
            .iter()
            .zip(self.0.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    }

    fn gradient(&self, y: &Matrix) -> Matrix {
        let data = y.data().iter().zip(self.0.data()).map(|(a, b)| a - b).collect();
        Matrix::from_vec(y.rows(), y.cols(), data).expect("same shape")
    }
}

/// `Σ w ⊙ y`, handy for probing a single output direction.
pub struct Weighted(pub Matrix);

impl ScalarLoss for Weighted {
    fn value(&self, y: &Matrix) -> f64 {
        y.data().iter().zip(self.0.data()).map(|(a, b)| a * b).sum()
    }

    fn gradient(&self, _: &Matrix) -> Matrix {
        self.0.clone()
    }
}

/// Worst relative error between analytic and central-difference gradients,
/// over every parameter and every input entry.
pub fn grad_check(net: &MlpNetwork, input: &Matrix, loss: &dyn ScalarLoss, step: f64) -> Result<f64> {
    let cache = net.forward(input)?;
    let upstream = loss.gradient(cache.output());
    let (grads, input_grad) = net.backward(&cache, &upstream)?;

    let eval = |n: &MlpNetwork, x: &Matrix| -> Result<f64> { Ok(loss.value(&n.predict(x)?)) };

    let mut worst: f64 = 0.0;
    let mut probe = net.clone();
    for (t, tensor) in grads.tensors.iter().enumerate() {
        for (i, &analytic) in tensor.iter().enumerate() {
            let orig = probe.params()[t][i];
            probe.params_mut()[t][i] = orig + step;
            let plus = eval(&probe, input)?;
            probe.params_mut()[t][i] = orig - step;
            let minus = eval(&probe, input)?;
            probe.params_mut()[t][i] = orig;
            worst = worst.max(relative_error(analytic, (plus - minus) / (2.0 * step)));
        }
    }

    let mut x = input.clone();
    for i in 0..x.data().len() {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + step;
        let plus = eval(net, &x)?;
        x.data_mut()[i] = orig - step;
        let minus = eval(net, &x)?;
        x.data_mut()[i] = orig;
        worst = worst.max(relative_error(input_grad.data()[i], (plus - minus) / (2.0 * step)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{ActivationKind, DenseLayer, Layer};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn linear_quadratic_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = MlpNetwork::init(&[3, 2], &[ActivationKind::Linear], 5).unwrap();
        let x = random_matrix(&mut rng, 4, 3);
        let target = random_matrix(&mut rng, 4, 2);
        let err = grad_check(&net, &x, &Quadratic(target), 1e-5).unwrap();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn relu_away_from_kinks() {
        let acts = [ActivationKind::Relu, ActivationKind::Linear];
        let net = MlpNetwork::init(&[3, 6, 2], &acts, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let step = 1e-5;
        let x = loop {
            let x = random_matrix(&mut rng, 5, 3);
            let cache = net.forward(&x).unwrap();
            if cache.min_relu_margin(&net).unwrap() > 10.0 * step {
                break x;
            }
        };
        let target = random_matrix(&mut rng, 5, 2);
        let err = grad_check(&net, &x, &Quadratic(target), step).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn power_norm_batch_term() {
        let acts = [ActivationKind::Tanh, ActivationKind::Linear];
        let net = MlpNetwork::init(&[2, 5, 2], &acts, 4).unwrap().with_power_norm();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 6, 2);
        let w = random_matrix(&mut rng, 6, 2);
        let err = grad_check(&net, &x, &Weighted(w), 1e-5).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn detects_wrong_gradient() {
        // A loss whose reported gradient is off by a factor two must fail.
        struct Wrong;
        impl ScalarLoss for Wrong {
            fn value(&self, y: &Matrix) -> f64 {
                y.data().iter().map(|v| v * v).sum()
            }
            fn gradient(&self, y: &Matrix) -> Matrix {
                y.clone()
            }
        }
        let d = DenseLayer::new(Matrix::from_rows(&[[1.5]]).unwrap(), vec![0.2]).unwrap();
        let net = MlpNetwork::from_layers(1, vec![Layer::Dense(d)]).unwrap();
        let x = Matrix::from_rows(&[[0.7]]).unwrap();
        assert!(grad_check(&net, &x, &Wrong, 1e-5).unwrap() > 0.4);
    }
}
