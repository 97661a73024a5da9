//! Experiment files: flat TOML mirroring `SystemConfig` plus sweep settings.
//!
//! ```toml
//! version = 1
//! k_bits = 2
//! csi_mode = "no_csi"
//! channel = "awgn"
//! train_grid_db = [0.0, 5.0, 10.0]
//! ```
//!
//! Every key except `version` is optional; missing keys take the desk-scale
//! defaults.

use std::path::{Path, PathBuf};

use pnc_core::channel::ChannelKind;
use pnc_core::mlp::ActivationKind;
use pnc_core::persist::line_of;
use pnc_core::system::{CsiMode, SystemConfig, N_DIMS};
use serde::Deserialize;

use crate::error::CliError;

pub const EXPERIMENT_VERSION: u32 = 1;
pub const DEFAULT_EVAL_SYMBOLS: usize = 100_000;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub version: Option<u32>,
    pub k_bits: Option<usize>,
    pub n_dims: Option<usize>,
    pub hidden_sizes: Option<Vec<usize>>,
    pub activation: Option<ActivationKind>,
    pub csi_mode: Option<CsiMode>,
    pub channel: Option<ChannelKind>,
    pub train_snr_db: Option<f64>,
    pub minibatch: Option<usize>,
    pub num_minibatches: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub seed: Option<u64>,
    pub train_grid_db: Option<Vec<f64>>,
    pub eval_grid_db: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub eval_symbols: Option<usize>,
    pub eval_seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

/// A validated experiment with defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub system: SystemConfig,
    pub train_grid_db: Vec<f64>,
    pub eval_grid_db: Vec<f64>,
    pub seeds: Vec<u64>,
    pub eval_symbols: usize,
    pub eval_seed: u64,
    pub out_dir: Option<PathBuf>,
}

/// Grid from 0 to `end` inclusive in 5 dB steps.
fn five_db_grid(end: f64) -> Vec<f64> {
    (0..=(end / 5.0) as usize).map(|i| 5.0 * i as f64).collect()
}

fn key_line(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(1, |i| i + 1)
}

const KEYS: &[&str] = &[
    "version", "k_bits", "n_dims", "hidden_sizes", "activation", "csi_mode", "channel",
    "train_snr_db", "num_minibatches", "minibatch", "epochs", "learning_rate", "seeds",
    "seed", "train_grid_db", "eval_grid_db", "eval_symbols", "eval_seed", "out_dir",
];

impl Experiment {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            let code = if e.kind() == std::io::ErrorKind::NotFound { 2 } else { 3 };
            CliError::new(code, format!("{}: {e}", path.display()))
        })?;
        Self::parse(&text, path, seed_override)
    }

    /// `seed_override` replaces the file's `seed`, and with it the default
    /// seed list and evaluation seed. An explicit `seeds` list is kept.
    pub fn parse(text: &str, path: &Path, seed_override: Option<u64>) -> Result<Self, CliError> {
        let at = |line: usize, msg: String| CliError::new(2, format!("{}:{line}: {msg}", path.display()));
        let file: ExperimentFile = toml::from_str(text)
            .map_err(|e| at(e.span().map_or(1, |s| line_of(text, s.start)), e.message().to_string()))?;
        match file.version {
            None => return Err(at(1, "missing required key `version`".into())),
            Some(EXPERIMENT_VERSION) => {}
            Some(v) => {
                return Err(at(key_line(text, "version"), format!("unsupported version {v}")))
            }
        }

        let k = file.k_bits.unwrap_or(2);
        let d = SystemConfig::desk_scale(k);
        let seed = seed_override.or(file.seed).unwrap_or(0);
        let system = SystemConfig {
            k_bits: k,
            n_dims: file.n_dims.unwrap_or(N_DIMS),
            hidden_sizes: file.hidden_sizes.unwrap_or(d.hidden_sizes),
            activation: file.activation.unwrap_or(d.activation),
            csi_mode: file.csi_mode.unwrap_or(d.csi_mode),
            channel: file.channel.unwrap_or(d.channel),
            train_snr_db: file.train_snr_db.unwrap_or(d.train_snr_db),
            minibatch: file.minibatch.unwrap_or(d.minibatch),
            num_minibatches: file.num_minibatches.unwrap_or(d.num_minibatches),
            epochs: file.epochs.unwrap_or(d.epochs),
            learning_rate: file.learning_rate.unwrap_or(d.learning_rate),
            seed,
        };
        system.validate().map_err(|e| {
            let msg = e.to_string();
            let key = KEYS.iter().find(|k| msg.contains(*k)).copied().unwrap_or("version");
            at(key_line(text, key), msg)
        })?;

        let default_end = if k == 4 || system.channel == ChannelKind::BlockRayleigh { 30.0 } else { 20.0 };
        let train_grid_db = file.train_grid_db.unwrap_or_else(|| five_db_grid(default_end));
        let eval_grid_db = file.eval_grid_db.unwrap_or_else(|| train_grid_db.clone());
        let seeds = file.seeds.unwrap_or_else(|| vec![seed]);
        for (key, grid) in [("train_grid_db", &train_grid_db), ("eval_grid_db", &eval_grid_db)] {
            if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
                return Err(at(key_line(text, key), format!("{key} must be a non-empty list of finite values")));
            }
        }
        if seeds.is_empty() {
            return Err(at(key_line(text, "seeds"), "seeds must be non-empty".into()));
        }
        let eval_symbols = file.eval_symbols.unwrap_or(DEFAULT_EVAL_SYMBOLS);
        if eval_symbols == 0 {
            return Err(at(key_line(text, "eval_symbols"), "eval_symbols must be at least 1".into()));
        }
        Ok(Experiment {
            system,
            train_grid_db,
            eval_grid_db,
            seeds,
            eval_symbols,
            eval_seed: file.eval_seed.unwrap_or(seed),
            out_dir: file.out_dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Experiment, CliError> {
        Experiment::parse(text, Path::new("exp.toml"), None)
    }

    #[test]
    fn defaults_are_desk_scale() {
        let e = parse("version = 1\n").unwrap();
        assert_eq!(e.system, SystemConfig::desk_scale(2));
        assert_eq!(e.train_grid_db, vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        assert_eq!(e.seeds, vec![0]);
        assert_eq!(e.eval_symbols, DEFAULT_EVAL_SYMBOLS);
        let f = parse("version = 1\nchannel = \"block_rayleigh\"\n").unwrap();
        assert_eq!(f.train_grid_db.last(), Some(&30.0));
    }

    #[test]
    fn version_is_mandatory() {
        let err = parse("k_bits = 2\n").unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.msg.contains("version"));
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse("version = 1\nk_bits = 2\nbogus = 3\n").unwrap_err();
        assert!(err.msg.starts_with("exp.toml:3:"), "{}", err.msg);
        let err = parse("version = 1\n\nk_bits = 3\n").unwrap_err();
        assert!(err.msg.starts_with("exp.toml:3:"), "{}", err.msg);
        let err = parse("version = 1\nepochs = 0\n").unwrap_err();
        assert!(err.msg.starts_with("exp.toml:2:"), "{}", err.msg);
        let err = parse("version = 1\nactivation = \"sigmoid\"\n").unwrap_err();
        assert!(err.msg.starts_with("exp.toml:2:"), "{}", err.msg);
    }

    #[test]
    fn seed_override() {
        let e = Experiment::parse("version = 1\nseed = 4\n", Path::new("e"), Some(9)).unwrap();
        assert_eq!(e.system.seed, 9);
        assert_eq!(e.seeds, vec![9]);
        let e = Experiment::parse("version = 1\nseeds = [1, 2]\n", Path::new("e"), Some(9)).unwrap();
        assert_eq!(e.seeds, vec![1, 2]);
    }
}
