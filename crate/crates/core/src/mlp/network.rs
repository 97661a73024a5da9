//! Fixed-topology feedforward network with exact reverse-mode gradients.
//!
//! A forward pass records every layer input in a [`ForwardCache`]; `backward`
//! replays the stack in reverse and returns both the parameter gradients and
//! the gradient with respect to the network input, so gradients can be chained
//! through whatever fed the network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    Tanh,
    Sigmoid,
    Linear,
}

impl ActivationKind {
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "relu" => ActivationKind::Relu,
            "tanh" => ActivationKind::Tanh,
            "sigmoid" => ActivationKind::Sigmoid,
            "linear" => ActivationKind::Linear,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Linear => x,
        }
    }

    /// Derivative expressed through the layer input `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Tanh => 1.0 - y * y,
            ActivationKind::Sigmoid => y * (1.0 - y),
            ActivationKind::Linear => 1.0,
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    /// `in_dim × out_dim`
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::Config(format!(
                "bias length {} does not match {} output units",
                bias.len(),
                weights.cols()
            )));
        }
        Ok(DenseLayer { weights, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    fn forward(&self, x: &Matrix) -> Matrix {
        let mut out = x.matmul(&self.weights);
        for i in 0..out.rows() {
            for (v, b) in out.row_mut(i).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        out
    }
}

/// How the transmit-power normalization obtains its scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PowerNormMode {
    /// Scale each batch so that its mean per-row energy is exactly one.
    BatchStatistic,
    /// Multiply by a frozen scale measured once on a large batch.
    Calibrated(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerNormLayer {
    pub mode: PowerNormMode,
}

impl PowerNormLayer {
    pub fn batch() -> Self {
        PowerNormLayer {
            mode: PowerNormMode::BatchStatistic,
        }
    }

    fn scale_for(&self, x: &Matrix) -> f64 {
        match self.mode {
            PowerNormMode::Calibrated(s) => s,
            PowerNormMode::BatchStatistic => batch_scale(x.mean_row_energy()),
        }
    }
}

fn batch_scale(energy: f64) -> f64 {
    // An all-zero batch stays all-zero.
    if energy > f64::MIN_POSITIVE {
        1.0 / energy.sqrt()
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Dense(DenseLayer),
    Activation(ActivationKind),
    PowerNorm(PowerNormLayer),
}

/// Intermediates of one forward pass, consumed by [`MlpNetwork::backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    generation: u64,
    /// `values[i]` is the input of layer `i`; the last entry is the output.
    values: Vec<Matrix>,
    /// Scale used by each executed power-norm layer (0 for other layers).
    scales: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.values.last().expect("cache holds at least the input")
    }

    pub fn into_output(mut self) -> Matrix {
        self.values.pop().expect("cache holds at least the input")
    }

    /// Number of layers this pass executed.
    pub fn depth(&self) -> usize {
        self.values.len() - 1
    }

    /// Smallest |pre-activation| seen at any ReLU layer, if there is one.
    pub fn min_relu_margin(&self, net: &MlpNetwork) -> Option<f64> {
        net.layers[..self.depth()]
            .iter()
            .zip(&self.values)
            .filter(|(l, _)| matches!(l, Layer::Activation(ActivationKind::Relu)))
            .flat_map(|(_, x)| x.data().iter().map(|v| v.abs()))
            .reduce(f64::min)
    }
}

/// Gradients for every trainable tensor, in [`MlpNetwork::params`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &MlpNetwork) -> Self {
        Gradients {
            tensors: net.params().iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug)]
pub struct MlpNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
    /// Bumped on every mutable access to parameters; caches from an older
    /// generation are rejected.
    generation: u64,
    pending: Option<ForwardCache>,
}

impl PartialEq for MlpNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.input_dim == other.input_dim && self.layers == other.layers
    }
}

impl MlpNetwork {
    /// Builds a network from explicit layers, checking dimension chaining.
    pub fn from_layers(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Config("network input dimension is zero".into()));
        }
        let mut width = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if let Layer::Dense(d) = layer {
                if d.in_dim() != width {
                    return Err(Error::Config(format!(
                        "layer {i}: dense input {} does not match incoming width {width}",
                        d.in_dim()
                    )));
                }
                width = d.out_dim();
            }
        }
        Ok(MlpNetwork {
            input_dim,
            layers,
            generation: 0,
            pending: None,
        })
    }

    /// Glorot-uniform dense stack with zero biases.
    ///
    /// `activations[i]` follows dense layer `i`; `Linear` inserts nothing.
    pub fn init(dims: &[usize], activations: &[ActivationKind], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Config(format!(
                "need at least input and output dimensions, got {dims:?}"
            )));
        }
        if activations.len() != dims.len() - 1 {
            return Err(Error::Config(format!(
                "{} dense layers need {} activations, got {}",
                dims.len() - 1,
                dims.len() - 1,
                activations.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Config(format!("zero-width layer in {dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for (w, &act) in dims.windows(2).zip(activations) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let values = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-limit..limit))
                .collect();
            let weights = Matrix::from_vec(fan_in, fan_out, values)?;
            layers.push(Layer::Dense(DenseLayer::new(weights, vec![0.0; fan_out])?));
            if act != ActivationKind::Linear {
                layers.push(Layer::Activation(act));
            }
        }
        MlpNetwork::from_layers(dims[0], layers)
    }

    /// Appends a batch-statistic power normalization to the output.
    pub fn with_power_norm(mut self) -> Self {
        self.layers.push(Layer::PowerNorm(PowerNormLayer::batch()));
        self
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers
            .iter()
            .rev()
            .find_map(|l| match l {
                Layer::Dense(d) => Some(d.out_dim()),
                _ => None,
            })
            .unwrap_or(self.input_dim)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn dense_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    pub fn last_activation(&self) -> Option<ActivationKind> {
        match self.layers.last() {
            Some(Layer::Activation(a)) => Some(*a),
            _ => None,
        }
    }

    pub fn ends_in_power_norm(&self) -> bool {
        matches!(self.layers.last(), Some(Layer::PowerNorm(_)))
    }

    /// Trainable tensors: weights then bias of each dense layer, in order.
    pub fn params(&self) -> Vec<&[f64]> {
        self.dense_layers()
            .flat_map(|d| [d.weights.data(), d.bias.as_slice()])
            .collect()
    }

    /// Mutable trainable tensors. Invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation += 1;
        self.pending = None;
        self.layers
            .iter_mut()
            .filter_map(|l| match l {
                Layer::Dense(d) => Some(d),
                _ => None,
            })
            .flat_map(|d| [d.weights.data_mut(), d.bias.as_mut_slice()])
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn power_norm_modes(&self) -> Vec<PowerNormMode> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::PowerNorm(p) => Some(p.mode),
                _ => None,
            })
            .collect()
    }

    /// True when no power-norm layer depends on batch statistics.
    pub fn is_calibrated(&self) -> bool {
        self.power_norm_modes()
            .iter()
            .all(|m| matches!(m, PowerNormMode::Calibrated(_)))
    }

    pub fn set_power_norm_mode(&mut self, mode: PowerNormMode) {
        for l in &mut self.layers {
            if let Layer::PowerNorm(p) = l {
                p.mode = mode;
            }
        }
    }

    /// Freezes every power-norm layer at the scale that normalizes `input`'s
    /// image to unit mean energy. Processes the batch in chunks, so very large
    /// calibration batches are fine.
    pub fn calibrate_power_norm(&mut self, input: &Matrix) -> Result<()> {
        self.check_input(input)?;
        let norm_at: Vec<usize> = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Layer::PowerNorm(_)))
            .map(|(i, _)| i)
            .collect();
        for idx in norm_at {
            let mut energy = 0.0;
            for chunk in chunk_rows(input, 4096) {
                let mut x = chunk;
                for layer in &self.layers[..idx] {
                    x = self.apply_layer(layer, &x).0;
                }
                energy += x.data().iter().map(|v| v * v).sum::<f64>();
            }
            let scale = batch_scale(energy / input.rows() as f64);
            if let Layer::PowerNorm(p) = &mut self.layers[idx] {
                p.mode = PowerNormMode::Calibrated(scale);
            }
        }
        Ok(())
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.cols() != self.input_dim {
            return Err(Error::Config(format!(
                "network expects {} input columns, got {}",
                self.input_dim,
                input.cols()
            )));
        }
        Ok(())
    }

    fn apply_layer(&self, layer: &Layer, x: &Matrix) -> (Matrix, f64) {
        match layer {
            Layer::Dense(d) => (d.forward(x), 0.0),
            Layer::Activation(a) => (x.map(|v| a.apply(v)), 0.0),
            Layer::PowerNorm(p) => {
                let s = p.scale_for(x);
                (x.map(|v| v * s), s)
            }
        }
    }

    fn run(&self, input: &Matrix, depth: usize) -> Result<ForwardCache> {
        self.check_input(input)?;
        let mut values = Vec::with_capacity(depth + 1);
        let mut scales = Vec::with_capacity(depth);
        values.push(input.clone());
        for layer in &self.layers[..depth] {
            let (y, s) = self.apply_layer(layer, values.last().unwrap());
            values.push(y);
            scales.push(s);
        }
        Ok(ForwardCache {
            generation: self.generation,
            values,
            scales,
        })
    }

    /// Full forward pass.
    pub fn forward(&self, input: &Matrix) -> Result<ForwardCache> {
        self.run(input, self.layers.len())
    }

    /// Forward pass that stops before a trailing sigmoid, yielding logits.
    pub fn forward_logits(&self, input: &Matrix) -> Result<ForwardCache> {
        let depth = match self.last_activation() {
            Some(ActivationKind::Sigmoid) => self.layers.len() - 1,
            _ => self.layers.len(),
        };
        self.run(input, depth)
    }

    /// Forward pass without retaining intermediates.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let mut x = input.clone();
        for layer in &self.layers {
            x = self.apply_layer(layer, &x).0;
        }
        Ok(x)
    }

    /// Logits without retaining intermediates.
    pub fn predict_logits(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let depth = match self.last_activation() {
            Some(ActivationKind::Sigmoid) => self.layers.len() - 1,
            _ => self.layers.len(),
        };
        let mut x = input.clone();
        for layer in &self.layers[..depth] {
            x = self.apply_layer(layer, &x).0;
        }
        Ok(x)
    }

    /// Reverse pass through the layers recorded in `cache`.
    ///
    /// Returns parameter gradients and the gradient with respect to the input.
    /// Parameters are not touched.
    pub fn backward(&self, cache: &ForwardCache, upstream: &Matrix) -> Result<(Gradients, Matrix)> {
        if cache.generation != self.generation {
            return Err(Error::State(
                "forward cache predates a parameter update".into(),
            ));
        }
        if upstream.shape() != cache.output().shape() {
            return Err(Error::Config(format!(
                "upstream gradient {:?} does not match output {:?}",
                upstream.shape(),
                cache.output().shape()
            )));
        }
        let depth = cache.depth();
        let n_dense = self.dense_layers().count();
        let mut tensors: Vec<Vec<f64>> = vec![Vec::new(); 2 * n_dense];
        let mut dense_idx = self.layers[..depth]
            .iter()
            .filter(|l| matches!(l, Layer::Dense(_)))
            .count();
        // Dense layers beyond the executed depth get zero gradients.
        for (slot, d) in self.dense_layers().enumerate().skip(dense_idx) {
            tensors[2 * slot] = vec![0.0; d.weights.data().len()];
            tensors[2 * slot + 1] = vec![0.0; d.bias.len()];
        }

        let mut grad = upstream.clone();
        for i in (0..depth).rev() {
            let x = &cache.values[i];
            let y = &cache.values[i + 1];
            grad = match &self.layers[i] {
                Layer::Dense(d) => {
                    dense_idx -= 1;
                    let gw = x.t_matmul(&grad);
                    let mut gb = vec![0.0; d.out_dim()];
                    for r in grad.iter_rows() {
                        for (b, g) in gb.iter_mut().zip(r) {
                            *b += g;
                        }
                    }
                    tensors[2 * dense_idx] = gw.into_vec();
                    tensors[2 * dense_idx + 1] = gb;
                    grad.matmul_t(&d.weights)
                }
                Layer::Activation(a) => {
                    let mut g = grad;
                    for ((gv, xv), yv) in g.data_mut().iter_mut().zip(x.data()).zip(y.data()) {
                        *gv *= a.derivative(*xv, *yv);
                    }
                    g
                }
                Layer::PowerNorm(p) => {
                    let s = cache.scales[i];
                    let mut g = grad.map(|v| v * s);
                    if p.mode == PowerNormMode::BatchStatistic && s > 0.0 {
                        // d/dx of x·(mean energy)^(-1/2) adds a rank-one term
                        // coupling every row to the batch energy.
                        let dot: f64 = grad.data().iter().zip(x.data()).map(|(a, b)| a * b).sum();
                        let c = s * s * s * dot / x.rows() as f64;
                        for (gv, xv) in g.data_mut().iter_mut().zip(x.data()) {
                            *gv -= c * xv;
                        }
                    }
                    g
                }
            };
        }
        Ok((Gradients { tensors }, grad))
    }

    /// Forward pass that keeps its cache inside the network for a following
    /// [`MlpNetwork::backward_pending`].
    pub fn forward_pending(&mut self, input: &Matrix) -> Result<Matrix> {
        let cache = self.forward(input)?;
        let out = cache.output().clone();
        self.pending = Some(cache);
        Ok(out)
    }

    pub fn backward_pending(&mut self, upstream: &Matrix) -> Result<(Gradients, Matrix)> {
        let cache = self
            .pending
            .take()
            .ok_or_else(|| Error::State("backward called without a preceding forward".into()))?;
        self.backward(&cache, upstream)
    }
}

fn chunk_rows(m: &Matrix, size: usize) -> impl Iterator<Item = Matrix> + '_ {
    (0..m.rows()).step_by(size).map(move |start| {
        let end = (start + size).min(m.rows());
        let data = m.data()[start * m.cols()..end * m.cols()].to_vec();
        Matrix::from_vec(end - start, m.cols(), data).expect("non-empty chunk")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_net() -> MlpNetwork {
        let w = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        MlpNetwork::from_layers(2, vec![Layer::Dense(DenseLayer::new(w, vec![0.0; 2]).unwrap())])
            .unwrap()
    }

    #[test]
    fn identity_dense_passes_through() {
        let net = identity_net();
        let x = Matrix::from_rows(&[[3.0, -1.0]]).unwrap();
        assert_eq!(net.predict(&x).unwrap().row(0), &[3.0, -1.0]);
    }

    #[test]
    fn relu_layer() {
        let net = MlpNetwork::from_layers(3, vec![Layer::Activation(ActivationKind::Relu)]).unwrap();
        let x = Matrix::from_rows(&[[2.0, -5.0, 0.0]]).unwrap();
        assert_eq!(net.predict(&x).unwrap().row(0), &[2.0, 0.0, 0.0]);
    }

    #[test]
    fn power_norm_hand_example() {
        let net = MlpNetwork::from_layers(2, vec![Layer::PowerNorm(PowerNormLayer::batch())]).unwrap();
        let x = Matrix::from_rows(&[[2.0, 0.0], [0.0, 0.0]]).unwrap();
        let y = net.predict(&x).unwrap();
        assert!((y.get(0, 0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(y.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn power_norm_zero_batch_stays_zero() {
        let net = MlpNetwork::from_layers(2, vec![Layer::PowerNorm(PowerNormLayer::batch())]).unwrap();
        let y = net.predict(&Matrix::zeros(3, 2)).unwrap();
        assert!(y.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_backward() {
        let net = identity_net();
        let x = Matrix::from_rows(&[[3.0, -1.0], [0.5, 2.0]]).unwrap();
        let cache = net.forward(&x).unwrap();
        let ones = Matrix::from_vec(2, 2, vec![1.0; 4]).unwrap();
        let (grads, gx) = net.backward(&cache, &ones).unwrap();
        assert_eq!(gx, ones);
        // xᵀ·1: column sums of x replicated across outputs
        assert_eq!(grads.tensors[0], vec![3.5, 3.5, 1.0, 1.0]);
        assert_eq!(grads.tensors[1], vec![2.0, 2.0]);
    }

    #[test]
    fn sigmoid_derivative_at_zero() {
        let net = MlpNetwork::from_layers(1, vec![Layer::Activation(ActivationKind::Sigmoid)]).unwrap();
        let x = Matrix::from_rows(&[[0.0]]).unwrap();
        let cache = net.forward(&x).unwrap();
        let up = Matrix::from_rows(&[[2.0]]).unwrap();
        let (_, gx) = net.backward(&cache, &up).unwrap();
        assert_eq!(gx.get(0, 0), 0.5);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let net = identity_net();
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(net.forward(&x), Err(Error::Config(_))));
    }

    #[test]
    fn backward_without_forward_is_state_error() {
        let mut net = identity_net();
        let up = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        assert!(matches!(net.backward_pending(&up), Err(Error::State(_))));
        net.forward_pending(&up).unwrap();
        assert!(net.backward_pending(&up).is_ok());
        assert!(matches!(net.backward_pending(&up), Err(Error::State(_))));
    }

    #[test]
    fn stale_cache_rejected() {
        let mut net = identity_net();
        let x = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let cache = net.forward(&x).unwrap();
        net.params_mut()[0][0] = 2.0;
        assert!(matches!(net.backward(&cache, &x), Err(Error::State(_))));
    }

    #[test]
    fn init_shapes_and_zero_bias() {
        let acts = [ActivationKind::Relu, ActivationKind::Relu, ActivationKind::Linear];
        let net = MlpNetwork::init(&[4, 100, 100, 2], &acts, 7).unwrap();
        let shapes: Vec<_> = net.dense_layers().map(|d| d.weights.shape()).collect();
        assert_eq!(shapes, vec![(4, 100), (100, 100), (100, 2)]);
        assert!(net.dense_layers().all(|d| d.bias.iter().all(|b| *b == 0.0)));
        let limit = (6.0f64 / 104.0).sqrt();
        let first = net.dense_layers().next().unwrap();
        assert!(first.weights.data().iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn init_is_deterministic() {
        let acts = [ActivationKind::Tanh, ActivationKind::Linear];
        let a = MlpNetwork::init(&[3, 5, 2], &acts, 11).unwrap();
        let b = MlpNetwork::init(&[3, 5, 2], &acts, 11).unwrap();
        let c = MlpNetwork::init(&[3, 5, 2], &acts, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn init_rejects_short_dims() {
        assert!(matches!(MlpNetwork::init(&[], &[], 0), Err(Error::Config(_))));
        assert!(matches!(MlpNetwork::init(&[3], &[], 0), Err(Error::Config(_))));
    }

    #[test]
    fn calibration_freezes_batch_scale() {
        let acts = [ActivationKind::Tanh, ActivationKind::Linear];
        let mut net = MlpNetwork::init(&[2, 6, 2], &acts, 3).unwrap().with_power_norm();
        let x = Matrix::from_vec(5000, 2, (0..10000).map(|i| ((i * 37 % 101) as f64) / 50.0 - 1.0).collect()).unwrap();
        let batch = net.predict(&x).unwrap();
        net.calibrate_power_norm(&x).unwrap();
        assert!(net.is_calibrated());
        let frozen = net.predict(&x).unwrap();
        for (a, b) in batch.data().iter().zip(frozen.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
