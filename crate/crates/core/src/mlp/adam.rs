use super::network::{Gradients, MlpNetwork};
use crate::error::{Error, Result};

/// Adam with bias correction. One state per network.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(net: &MlpNetwork, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<f64>> = net.params().iter().map(|p| vec![0.0; p.len()]).collect();
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, net: &mut MlpNetwork, grads: &Gradients) -> Result<()> {
        let mut params = net.params_mut();
        self.step_slices(&mut params, grads)
    }

    /// Applies one update to raw parameter slices.
    pub fn step_slices(&mut self, params: &mut [&mut [f64]], grads: &Gradients) -> Result<()> {
        if params.len() != grads.tensors.len() || params.len() != self.m.len() {
            return Err(Error::Config(format!(
                "adam: {} parameter tensors, {} gradients, {} moments",
                params.len(),
                grads.tensors.len(),
                self.m.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(&grads.tensors).zip(&self.m) {
            if p.len() != g.len() || p.len() != m.len() {
                return Err(Error::Config("adam: tensor length mismatch".into()));
            }
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(&grads.tensors)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
