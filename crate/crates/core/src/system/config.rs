use serde::{Deserialize, Serialize};

use crate::channel::ChannelKind;
use crate::error::{Error, Result};
use crate::mlp::ActivationKind;

/// Real dimensions per symbol (in-phase and quadrature).
pub const N_DIMS: usize = 2;

/// What the relay and terminals know beyond their received signals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    NoCsi,
    PerfectCsi,
    /// Perfect CSI, and the relay also sees both source bits and symbols.
    IdealRelay,
}

impl CsiMode {
    pub fn has_csi(self) -> bool {
        !matches!(self, CsiMode::NoCsi)
    }

    pub fn name(self) -> &'static str {
        match self {
            CsiMode::NoCsi => "no_csi",
            CsiMode::PerfectCsi => "perfect_csi",
            CsiMode::IdealRelay => "ideal_relay",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Bits per symbol: 1, 2 (4-QAM) or 4 (16-QAM).
    pub k_bits: usize,
    #[serde(default = "default_n_dims")]
    pub n_dims: usize,
    pub hidden_sizes: Vec<usize>,
    pub activation: ActivationKind,
    pub csi_mode: CsiMode,
    pub channel: ChannelKind,
    pub train_snr_db: f64,
    pub minibatch: usize,
    pub num_minibatches: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

fn default_n_dims() -> usize {
    N_DIMS
}

impl SystemConfig {
    /// Full-size networks and training budget.
    pub fn paper_scale(k_bits: usize) -> Self {
        SystemConfig {
            k_bits,
            n_dims: N_DIMS,
            hidden_sizes: vec![1000, 1000],
            activation: ActivationKind::Relu,
            csi_mode: CsiMode::NoCsi,
            channel: ChannelKind::Awgn,
            train_snr_db: 0.0,
            minibatch: 128,
            num_minibatches: 1000,
            epochs: 30,
            learning_rate: 1e-3,
            seed: 0,
        }
    }

    /// 100-unit hidden layers and 200 mini-batches: minutes on one core.
    pub fn desk_scale(k_bits: usize) -> Self {
        SystemConfig {
            hidden_sizes: vec![100, 100],
            num_minibatches: 200,
            ..SystemConfig::paper_scale(k_bits)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if ![1, 2, 4].contains(&self.k_bits) {
            return bad(format!("k_bits must be 1, 2 or 4, got {}", self.k_bits));
        }
        if self.n_dims != N_DIMS {
            return bad(format!("n_dims must be {N_DIMS}, got {}", self.n_dims));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return bad(format!("hidden_sizes must be non-empty and positive, got {:?}", self.hidden_sizes));
        }
        if !matches!(self.activation, ActivationKind::Relu | ActivationKind::Tanh) {
            return bad(format!("hidden activation must be relu or tanh, got {}", self.activation.name()));
        }
        for (name, v) in [
            ("minibatch", self.minibatch),
            ("num_minibatches", self.num_minibatches),
            ("epochs", self.epochs),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !self.train_snr_db.is_finite() {
            return bad("train_snr_db must be finite".into());
        }
        Ok(())
    }

    /// Bit patterns per symbol.
    pub fn patterns(&self) -> usize {
        1 << self.k_bits
    }
}
