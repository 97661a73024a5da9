//! Browser front end for `pnc-core`.
//!
//! Each operation has a plain Rust form returning JSON, which the tests
//! exercise natively, and a `#[wasm_bindgen]` wrapper that the page calls.

use pnc_core::baselines::{af_sum_rate, dnf_bpsk_map, QamConstellation};
use pnc_core::channel::{ChannelKind, ComplexCoef, GaussianRng, NoiseSpec};
use pnc_core::evaluation::{
    eval_rng, evaluate_model, extract_relay_constellation, extract_terminal_constellation,
    ConstellationDump,
};
use pnc_core::mlp::ActivationKind;
use pnc_core::system::{train, CsiMode, SystemConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest inputs the page may request; keeps the UI responsive.
pub const MAX_SYMBOLS: usize = 200_000;
pub const MAX_EPOCHS: usize = 30;
pub const MAX_DNF_POINTS: usize = 5_000;

#[derive(Serialize)]
struct CurvePoint {
    snr_db: f64,
    sum_rate: f64,
}

fn channel_kind(name: &str) -> Result<ChannelKind, String> {
    match name {
        "awgn" => Ok(ChannelKind::Awgn),
        "rayleigh" => Ok(ChannelKind::BlockRayleigh),
        other => Err(format!("unknown channel `{other}`")),
    }
}

fn csi_mode(name: &str) -> Result<CsiMode, String> {
    match name {
        "no_csi" => Ok(CsiMode::NoCsi),
        "perfect_csi" => Ok(CsiMode::PerfectCsi),
        "ideal_relay" => Ok(CsiMode::IdealRelay),
        other => Err(format!("unknown CSI mode `{other}`")),
    }
}

/// Amplify-and-forward sum rate over an SNR grid, as
/// `[{"snr_db": .., "sum_rate": ..}, ..]`.
pub fn af_curve(
    k_bits: usize,
    channel: &str,
    snr_db: &[f64],
    symbols: usize,
    seed: u64,
) -> Result<String, String> {
    if symbols == 0 || symbols > MAX_SYMBOLS {
        return Err(format!("symbols must be in 1..={MAX_SYMBOLS}"));
    }
    let channel = channel_kind(channel)?;
    let constellation = QamConstellation::new(k_bits).map_err(|e| e.to_string())?;
    let points = snr_db
        .iter()
        .map(|&snr| {
            af_sum_rate(&constellation, channel, snr, symbols, 128, &mut eval_rng(seed, snr))
                .map(|r| CurvePoint {
                    snr_db: snr,
                    sum_rate: r.sum_rate,
                })
                .map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(serde_json::to_string(&points).unwrap())
}

#[derive(Serialize)]
struct Point {
    label: String,
    i: f64,
    q: f64,
}

fn points(dump: &ConstellationDump) -> Vec<Point> {
    dump.points
        .iter()
        .map(|p| Point {
            label: p.label.clone(),
            i: p.i,
            q: p.q,
        })
        .collect()
}

#[derive(Serialize)]
struct Trained {
    loss_history: Vec<f64>,
    terminal: Vec<Point>,
    relay: Vec<Point>,
    learned_sum_rate: f64,
    af_sum_rate: f64,
}

/// Trains a small 4-QAM AWGN system and reports its constellations and its
/// sum rate next to amplify-and-forward at the training SNR.
pub fn train_small(csi: &str, snr_db: f64, epochs: usize, seed: u64) -> Result<String, String> {
    if epochs == 0 || epochs > MAX_EPOCHS {
        return Err(format!("epochs must be in 1..={MAX_EPOCHS}"));
    }
    let config = SystemConfig {
        hidden_sizes: vec![32, 32],
        activation: ActivationKind::Relu,
        csi_mode: csi_mode(csi)?,
        train_snr_db: snr_db,
        minibatch: 64,
        num_minibatches: 60,
        epochs,
        seed,
        ..SystemConfig::desk_scale(2)
    };
    let err = |e: pnc_core::Error| e.to_string();
    let outcome = train(&config).map_err(err)?;
    let mut system = outcome.system;
    let curve = evaluate_model(&system, ChannelKind::Awgn, &[snr_db], 20_000, seed).map_err(err)?;
    system
        .calibrate(ChannelKind::Awgn, snr_db, &mut eval_rng(seed, snr_db))
        .map_err(err)?;
    let terminal = extract_terminal_constellation(&system).map_err(err)?;
    let relay = extract_relay_constellation(&system, ComplexCoef::ONE, ComplexCoef::ONE).map_err(err)?;
    let af = af_sum_rate(
        &QamConstellation::new(2).map_err(err)?,
        ChannelKind::Awgn,
        snr_db,
        20_000,
        128,
        &mut eval_rng(seed, snr_db),
    )
    .map_err(err)?;
    let out = Trained {
        loss_history: outcome.loss_history,
        terminal: points(&terminal),
        relay: points(&relay),
        learned_sum_rate: curve.entries[0].sum_rate_bps_hz,
        af_sum_rate: af.sum_rate,
    };
    Ok(serde_json::to_string(&out).unwrap())
}

#[derive(Serialize)]
struct DnfSample {
    y_r: f64,
    x_r: f64,
    same: bool,
}

#[derive(Serialize)]
struct DnfRun {
    samples: Vec<DnfSample>,
    /// Fraction of symbols where the map disagrees with the XOR of the bits.
    relay_error_rate: f64,
}

/// Noisy BPSK superpositions at the relay (H = 1) and the denoising map's
/// decision for each: +1 when the two terminals sent the same bit.
pub fn dnf_scatter(snr_db: f64, count: usize, seed: u64) -> Result<String, String> {
    if count == 0 || count > MAX_DNF_POINTS {
        return Err(format!("count must be in 1..={MAX_DNF_POINTS}"));
    }
    let noise = NoiseSpec::from_snr_db(snr_db).map_err(|e| e.to_string())?;
    let mut rng = GaussianRng::seed_from_u64(seed);
    let mut errors = 0;
    let samples: Vec<DnfSample> = (0..count)
        .map(|_| {
            let x_a = 1.0 - 2.0 * rng.bit();
            let x_b = 1.0 - 2.0 * rng.bit();
            let y_r = x_a + x_b + noise.per_dim_std() * rng.standard_normal();
            let x_r = dnf_bpsk_map(y_r);
            let same = x_a == x_b;
            if (x_r > 0.0) != same {
                errors += 1;
            }
            DnfSample { y_r, x_r, same }
        })
        .collect();
    let run = DnfRun {
        samples,
        relay_error_rate: errors as f64 / count as f64,
    };
    Ok(serde_json::to_string(&run).unwrap())
}

#[wasm_bindgen(js_name = afCurve)]
pub fn af_curve_js(
    k_bits: usize,
    channel: &str,
    snr_db: Vec<f64>,
    symbols: usize,
    seed: u64,
) -> Result<String, JsError> {
    af_curve(k_bits, channel, &snr_db, symbols, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trainSmall)]
pub fn train_small_js(csi: &str, snr_db: f64, epochs: usize, seed: u64) -> Result<String, JsError> {
    train_small(csi, snr_db, epochs, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = dnfScatter)]
pub fn dnf_scatter_js(snr_db: f64, count: usize, seed: u64) -> Result<String, JsError> {
    dnf_scatter(snr_db, count, seed).map_err(|e| JsError::new(&e))
}
