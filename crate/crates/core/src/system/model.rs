//! The jointly trained two-way relay chain.
//!
//! ```text
//! S_A ─M─ X_A ─H_A─┐                      ┌─H_A─ Y_A ─D(S_A, X_A, ·)─ Ŝ_B
//!                  ├─(+Z_R)─ Y_R ─M_R─ X_R ┤
//! S_B ─M─ X_B ─H_B─┘                      └─H_B─ Y_B ─D(S_B, X_B, ·)─ Ŝ_A
//! ```
//!
//! `M` and `D` are single networks shared by both terminals, so their
//! gradients collect contributions from both directions.

use super::config::{CsiMode, SystemConfig};
use super::features::{
    bits_to_pm1, demod_feature_width, demod_features, demod_features_backward,
    relay_feature_width, relay_features, relay_features_backward, SideInfo,
};
use super::loss::{bce_loss_grad, bce_loss_sum};
use crate::channel::{
    apply_bc, apply_ma, complex_mul, complex_mul_adjoint, sample_awgn, ChannelKind, ComplexCoef,
    GaussianRng, NoiseSpec,
};
use crate::error::{Error, Result};
use crate::mlp::{ActivationKind, ForwardCache, Gradients, Matrix, MlpNetwork};

pub(crate) const STREAM_INIT: u64 = 0;
pub(crate) const STREAM_BITS: u64 = 1;
pub(crate) const STREAM_CHANNEL: u64 = 2;

/// All 2^k bit patterns as rows, most significant bit first.
pub fn bit_patterns(k_bits: usize) -> Matrix {
    let n = 1usize << k_bits;
    let data = (0..n)
        .flat_map(|p| (0..k_bits).map(move |j| ((p >> (k_bits - 1 - j)) & 1) as f64))
        .collect();
    Matrix::from_vec(n, k_bits, data).expect("k_bits >= 1")
}

/// Random {0, 1} matrix.
pub fn random_bits(rows: usize, k_bits: usize, rng: &mut GaussianRng) -> Matrix {
    let data = (0..rows * k_bits).map(|_| rng.bit()).collect();
    Matrix::from_vec(rows, k_bits, data).expect("non-empty")
}

/// One block of traffic: both terminals' bits, one channel pair, and the
/// three noise realizations.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub bits_a: Matrix,
    pub bits_b: Matrix,
    pub h_a: ComplexCoef,
    pub h_b: ComplexCoef,
    pub z_r: Matrix,
    pub z_a: Matrix,
    pub z_b: Matrix,
}

impl Batch {
    /// Draws the channel pair, then Z_R, Z_A and Z_B, in that order.
    pub fn with_bits(
        bits_a: Matrix,
        bits_b: Matrix,
        channel: ChannelKind,
        noise: NoiseSpec,
        rng: &mut GaussianRng,
    ) -> Self {
        let n = bits_a.rows();
        let (h_a, h_b) = channel.draw(rng);
        let z_r = sample_awgn(noise, n, rng);
        let z_a = sample_awgn(noise, n, rng);
        let z_b = sample_awgn(noise, n, rng);
        Batch {
            bits_a,
            bits_b,
            h_a,
            h_b,
            z_r,
            z_a,
            z_b,
        }
    }

    pub fn sample(
        k_bits: usize,
        rows: usize,
        channel: ChannelKind,
        noise: NoiseSpec,
        rng: &mut GaussianRng,
    ) -> Self {
        let bits_a = random_bits(rows, k_bits, rng);
        let bits_b = random_bits(rows, k_bits, rng);
        Batch::with_bits(bits_a, bits_b, channel, noise, rng)
    }

    pub fn noiseless(bits_a: Matrix, bits_b: Matrix, h_a: ComplexCoef, h_b: ComplexCoef) -> Self {
        let n = bits_a.rows();
        Batch {
            bits_a,
            bits_b,
            h_a,
            h_b,
            z_r: Matrix::zeros(n, 2),
            z_a: Matrix::zeros(n, 2),
            z_b: Matrix::zeros(n, 2),
        }
    }

    /// The same traffic with the roles of A and B exchanged.
    pub fn swapped(&self) -> Self {
        Batch {
            bits_a: self.bits_b.clone(),
            bits_b: self.bits_a.clone(),
            h_a: self.h_b,
            h_b: self.h_a,
            z_r: self.z_r.clone(),
            z_a: self.z_b.clone(),
            z_b: self.z_a.clone(),
        }
    }

    pub fn rows(&self) -> usize {
        self.bits_a.rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemGradients {
    pub terminal: Gradients,
    pub relay: Gradients,
    pub demod: Gradients,
}

impl SystemGradients {
    pub fn max_abs(&self) -> f64 {
        self.terminal
            .max_abs()
            .max(self.relay.max_abs())
            .max(self.demod.max_abs())
    }
}

/// Intermediates of one end-to-end pass.
#[derive(Clone, Debug)]
pub struct Tape {
    batch: Batch,
    mod_a: ForwardCache,
    mod_b: ForwardCache,
    relay: ForwardCache,
    demod_at_a: ForwardCache,
    demod_at_b: ForwardCache,
}

#[derive(Clone, Debug)]
pub struct EndToEnd {
    /// Terminal A's logits for B's bits.
    pub logits_b_at_a: Matrix,
    /// Terminal B's logits for A's bits.
    pub logits_a_at_b: Matrix,
    /// Mean bitwise cross entropy over both directions and all bits.
    pub loss: f64,
    /// Mean loss of the A → B direction alone.
    pub loss_a_to_b: f64,
    pub loss_b_to_a: f64,
    pub tape: Tape,
}

impl EndToEnd {
    /// Smallest |pre-activation| at any ReLU in the pass.
    pub fn min_relu_margin(&self, sys: &TwoWaySystem) -> Option<f64> {
        let t = &self.tape;
        [
            t.mod_a.min_relu_margin(&sys.terminal_mod),
            t.mod_b.min_relu_margin(&sys.terminal_mod),
            t.relay.min_relu_margin(&sys.relay_mod),
            t.demod_at_a.min_relu_margin(&sys.demod),
            t.demod_at_b.min_relu_margin(&sys.demod),
        ]
        .into_iter()
        .flatten()
        .reduce(f64::min)
    }

    pub fn x_a(&self) -> &Matrix {
        self.tape.mod_a.output()
    }

    pub fn x_b(&self) -> &Matrix {
        self.tape.mod_b.output()
    }

    pub fn x_r(&self) -> &Matrix {
        self.tape.relay.output()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoWaySystem {
    pub config: SystemConfig,
    pub terminal_mod: MlpNetwork,
    pub relay_mod: MlpNetwork,
    pub demod: MlpNetwork,
}

impl TwoWaySystem {
    /// Freshly initialized networks for `config`.
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let k = config.k_bits;
        let mut seeds = GaussianRng::stream(config.seed, STREAM_INIT);
        let stack = |input: usize, output: usize, last: ActivationKind, seed: u64| {
            let mut dims = vec![input];
            dims.extend(&config.hidden_sizes);
            dims.push(output);
            let mut acts = vec![config.activation; config.hidden_sizes.len()];
            acts.push(last);
            MlpNetwork::init(&dims, &acts, seed)
        };
        let terminal_mod = stack(k, 2, ActivationKind::Linear, seeds.next_u64())?.with_power_norm();
        let relay_mod = stack(
            relay_feature_width(config.csi_mode, k),
            2,
            ActivationKind::Linear,
            seeds.next_u64(),
        )?
        .with_power_norm();
        let demod = stack(
            demod_feature_width(config.csi_mode, k),
            k,
            ActivationKind::Sigmoid,
            seeds.next_u64(),
        )?;
        TwoWaySystem::from_networks(config, terminal_mod, relay_mod, demod)
    }

    /// Assembles a system from existing networks, checking their interfaces.
    pub fn from_networks(
        config: SystemConfig,
        terminal_mod: MlpNetwork,
        relay_mod: MlpNetwork,
        demod: MlpNetwork,
    ) -> Result<Self> {
        config.validate()?;
        let k = config.k_bits;
        let expect = |what: &str, net: &MlpNetwork, input: usize, output: usize| -> Result<()> {
            if net.input_dim() != input || net.output_dim() != output {
                return Err(Error::Config(format!(
                    "{what}: expected {input} -> {output}, network is {} -> {}",
                    net.input_dim(),
                    net.output_dim()
                )));
            }
            Ok(())
        };
        expect("terminal modulator", &terminal_mod, k, 2)?;
        expect("relay modulator", &relay_mod, relay_feature_width(config.csi_mode, k), 2)?;
        expect("demodulator", &demod, demod_feature_width(config.csi_mode, k), k)?;
        if !terminal_mod.ends_in_power_norm() || !relay_mod.ends_in_power_norm() {
            return Err(Error::Config("modulators must end in power normalization".into()));
        }
        if demod.last_activation() != Some(ActivationKind::Sigmoid) {
            return Err(Error::Config("demodulator must end in a sigmoid".into()));
        }
        Ok(TwoWaySystem {
            config,
            terminal_mod,
            relay_mod,
            demod,
        })
    }

    pub fn k_bits(&self) -> usize {
        self.config.k_bits
    }

    pub fn csi_mode(&self) -> CsiMode {
        self.config.csi_mode
    }

    pub fn terminal_modulate(&self, bits: &Matrix) -> Result<Matrix> {
        self.check_bits(bits)?;
        self.terminal_mod.predict(&bits_to_pm1(bits)?)
    }

    pub fn relay_modulate(&self, features: &Matrix) -> Result<Matrix> {
        self.relay_mod.predict(features)
    }

    fn check_bits(&self, bits: &Matrix) -> Result<()> {
        if bits.cols() != self.k_bits() {
            return Err(Error::Config(format!(
                "expected {} bit columns, got {}",
                self.k_bits(),
                bits.cols()
            )));
        }
        Ok(())
    }

    fn check_batch(&self, b: &Batch) -> Result<()> {
        self.check_bits(&b.bits_a)?;
        self.check_bits(&b.bits_b)?;
        let n = b.rows();
        if b.bits_b.rows() != n
            || [&b.z_r, &b.z_a, &b.z_b].iter().any(|z| z.shape() != (n, 2))
        {
            return Err(Error::Config("batch components disagree in shape".into()));
        }
        Ok(())
    }

    /// Runs the whole chain keeping every intermediate needed for backward.
    pub fn forward_end_to_end(&self, batch: &Batch) -> Result<EndToEnd> {
        self.check_batch(batch)?;
        let mode = self.csi_mode();
        let s_a = bits_to_pm1(&batch.bits_a)?;
        let s_b = bits_to_pm1(&batch.bits_b)?;

        let mod_a = self.terminal_mod.forward(&s_a)?;
        let mod_b = self.terminal_mod.forward(&s_b)?;
        let (x_a, x_b) = (mod_a.output(), mod_b.output());

        let y_r = apply_ma(x_a, x_b, batch.h_a, batch.h_b, &batch.z_r)?;
        let side = SideInfo {
            s_a: &s_a,
            x_a,
            s_b: &s_b,
            x_b,
        };
        let feats = relay_features(&y_r, batch.h_a, batch.h_b, mode, Some(side))?;
        let relay = self.relay_mod.forward(&feats)?;
        let x_r = relay.output();

        let y_a = apply_bc(x_r, batch.h_a, &batch.z_a)?;
        let y_b = apply_bc(x_r, batch.h_b, &batch.z_b)?;
        let demod_at_a = self
            .demod
            .forward_logits(&demod_features(&s_a, x_a, &y_a, batch.h_a, mode)?)?;
        let demod_at_b = self
            .demod
            .forward_logits(&demod_features(&s_b, x_b, &y_b, batch.h_b, mode)?)?;

        let logits_b_at_a = demod_at_a.output().clone();
        let logits_a_at_b = demod_at_b.output().clone();
        let per_dir = (batch.rows() * self.k_bits()) as f64;
        let sum_ab = bce_loss_sum(&logits_a_at_b, &batch.bits_a)?;
        let sum_ba = bce_loss_sum(&logits_b_at_a, &batch.bits_b)?;
        Ok(EndToEnd {
            logits_b_at_a,
            logits_a_at_b,
            loss: (sum_ab + sum_ba) / (2.0 * per_dir),
            loss_a_to_b: sum_ab / per_dir,
            loss_b_to_a: sum_ba / per_dir,
            tape: Tape {
                batch: batch.clone(),
                mod_a,
                mod_b,
                relay,
                demod_at_a,
                demod_at_b,
            },
        })
    }

    /// Gradients of the mean loss for all three networks.
    pub fn backward_end_to_end(&self, pass: &EndToEnd) -> Result<SystemGradients> {
        self.backward_scaled(pass, 1.0)
    }

    /// Gradients of `upstream · loss`.
    pub fn backward_scaled(&self, pass: &EndToEnd, upstream: f64) -> Result<SystemGradients> {
        let t = &pass.tape;
        let b = &t.batch;
        let k = self.k_bits();
        let mode = self.csi_mode();
        let scale = upstream / (2.0 * (b.rows() * k) as f64);

        // demodulators
        let g_la = bce_loss_grad(&pass.logits_b_at_a, &b.bits_b, scale)?;
        let g_lb = bce_loss_grad(&pass.logits_a_at_b, &b.bits_a, scale)?;
        let (mut g_demod, g_in_a) = self.demod.backward(&t.demod_at_a, &g_la)?;
        let (g_demod_b, g_in_b) = self.demod.backward(&t.demod_at_b, &g_lb)?;
        g_demod.accumulate(&g_demod_b);
        let (mut g_xa, g_ya) = demod_features_backward(&g_in_a, b.h_a, mode, k)?;
        let (mut g_xb, g_yb) = demod_features_backward(&g_in_b, b.h_b, mode, k)?;

        // broadcast hop and relay
        let mut g_xr = complex_mul_adjoint(b.h_a, &g_ya);
        g_xr.add_assign(&complex_mul_adjoint(b.h_b, &g_yb));
        let (g_relay, g_feats) = self.relay_mod.backward(&t.relay, &g_xr)?;
        let routed = relay_features_backward(&g_feats, b.h_a, b.h_b, mode, k)?;
        if let Some((sa, sb)) = &routed.side_symbols {
            g_xa.add_assign(sa);
            g_xb.add_assign(sb);
        }

        // multiple-access hop and terminal modulator
        g_xa.add_assign(&complex_mul_adjoint(b.h_a, &routed.y_r));
        g_xb.add_assign(&complex_mul_adjoint(b.h_b, &routed.y_r));
        let (mut g_term, _) = self.terminal_mod.backward(&t.mod_a, &g_xa)?;
        let (g_term_b, _) = self.terminal_mod.backward(&t.mod_b, &g_xb)?;
        g_term.accumulate(&g_term_b);

        Ok(SystemGradients {
            terminal: g_term,
            relay: g_relay,
            demod: g_demod,
        })
    }

    /// Logits of both directions without retaining intermediates.
    pub fn simulate(&self, batch: &Batch) -> Result<(Matrix, Matrix)> {
        self.check_batch(batch)?;
        let mode = self.csi_mode();
        let s_a = bits_to_pm1(&batch.bits_a)?;
        let s_b = bits_to_pm1(&batch.bits_b)?;
        let x_a = self.terminal_mod.predict(&s_a)?;
        let x_b = self.terminal_mod.predict(&s_b)?;
        let y_r = apply_ma(&x_a, &x_b, batch.h_a, batch.h_b, &batch.z_r)?;
        let side = SideInfo {
            s_a: &s_a,
            x_a: &x_a,
            s_b: &s_b,
            x_b: &x_b,
        };
        let x_r = self
            .relay_mod
            .predict(&relay_features(&y_r, batch.h_a, batch.h_b, mode, Some(side))?)?;
        let y_a = apply_bc(&x_r, batch.h_a, &batch.z_a)?;
        let y_b = apply_bc(&x_r, batch.h_b, &batch.z_b)?;
        let at_a = self
            .demod
            .predict_logits(&demod_features(&s_a, &x_a, &y_a, batch.h_a, mode)?)?;
        let at_b = self
            .demod
            .predict_logits(&demod_features(&s_b, &x_b, &y_b, batch.h_b, mode)?)?;
        Ok((at_a, at_b))
    }

    pub fn is_calibrated(&self) -> bool {
        self.terminal_mod.is_calibrated() && self.relay_mod.is_calibrated()
    }

    /// Freezes both power normalizations for inference.
    ///
    /// The terminal scale comes from all 2^K bit patterns with equal weight.
    /// The relay scale comes from 2^(2K)·1000 noisy superpositions that cycle
    /// through every (S_A, S_B) pair, drawn at `snr_db` over `channel` in
    /// blocks of `minibatch` symbols.
    pub fn calibrate(&mut self, channel: ChannelKind, snr_db: f64, rng: &mut GaussianRng) -> Result<()> {
        let k = self.k_bits();
        let p = self.config.patterns();
        let patterns = bit_patterns(k);
        self.terminal_mod
            .calibrate_power_norm(&bits_to_pm1(&patterns)?)?;

        let noise = NoiseSpec::from_snr_db(snr_db)?;
        let total = p * p * 1000;
        let block = self.config.minibatch;
        let mut feats = Vec::new();
        let mut start = 0;
        while start < total {
            let n = block.min(total - start);
            let pick = |f: &dyn Fn(usize) -> usize| -> Matrix {
                let rows: Vec<&[f64]> = (start..start + n).map(|i| patterns.row(f(i))).collect();
                Matrix::from_rows(&rows).expect("pattern rows")
            };
            let bits_a = pick(&|i| i % p);
            let bits_b = pick(&|i| (i / p) % p);
            let (h_a, h_b) = channel.draw(rng);
            let z_r = sample_awgn(noise, n, rng);
            let s_a = bits_to_pm1(&bits_a)?;
            let s_b = bits_to_pm1(&bits_b)?;
            let x_a = self.terminal_mod.predict(&s_a)?;
            let x_b = self.terminal_mod.predict(&s_b)?;
            let y_r = apply_ma(&x_a, &x_b, h_a, h_b, &z_r)?;
            let side = SideInfo {
                s_a: &s_a,
                x_a: &x_a,
                s_b: &s_b,
                x_b: &x_b,
            };
            feats.push(relay_features(&y_r, h_a, h_b, self.csi_mode(), Some(side))?);
            start += n;
        }
        let all = Matrix::vconcat(&feats.iter().collect::<Vec<_>>())?;
        self.relay_mod.calibrate_power_norm(&all)
    }

    /// Noiseless relay inputs `H_A·M(s_a) + H_B·M(s_b)` for every pattern pair,
    /// returned with the matching (s_a, s_b) bit rows.
    pub fn noiseless_superpositions(
        &self,
        h_a: ComplexCoef,
        h_b: ComplexCoef,
    ) -> Result<(Matrix, Matrix, Matrix)> {
        let p = self.config.patterns();
        let patterns = bit_patterns(self.k_bits());
        let rows_a: Vec<&[f64]> = (0..p * p).map(|i| patterns.row(i / p)).collect();
        let rows_b: Vec<&[f64]> = (0..p * p).map(|i| patterns.row(i % p)).collect();
        let bits_a = Matrix::from_rows(&rows_a)?;
        let bits_b = Matrix::from_rows(&rows_b)?;
        let mut y = complex_mul(h_a, &self.terminal_modulate(&bits_a)?);
        y.add_assign(&complex_mul(h_b, &self.terminal_modulate(&bits_b)?));
        Ok((y, bits_a, bits_b))
    }
}
