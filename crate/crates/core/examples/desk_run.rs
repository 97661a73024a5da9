//! Trains one desk-scale system and compares it with amplify-and-forward.
//!
//! `cargo run --release -p pnc-core --example desk_run -- [train_db] [csi] [channel] [seed] [eval_db] [activation]`

use std::time::Instant;

use pnc_core::baselines::{af_sum_rate, QamConstellation};
use pnc_core::channel::{ChannelKind, GaussianRng};
use pnc_core::evaluation::evaluate_model;
use pnc_core::mlp::ActivationKind;
use pnc_core::system::{train_with_progress, CsiMode, SystemConfig};

fn main() -> pnc_core::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let train_db: f64 = arg(0, "0").parse().expect("train SNR");
    let csi = match arg(1, "no_csi").as_str() {
        "perfect_csi" => CsiMode::PerfectCsi,
        "ideal_relay" => CsiMode::IdealRelay,
        _ => CsiMode::NoCsi,
    };
    let channel = if arg(2, "awgn") == "rayleigh" { ChannelKind::BlockRayleigh } else { ChannelKind::Awgn };
    let seed: u64 = arg(3, "0").parse().expect("seed");
    let eval_db: f64 = arg(4, "0").parse().expect("eval SNR");
    let activation = ActivationKind::parse(&arg(5, "relu")).expect("activation");

    let cfg = SystemConfig {
        train_snr_db: train_db,
        csi_mode: csi,
        channel,
        seed,
        activation,
        ..SystemConfig::desk_scale(2)
    };
    let t0 = Instant::now();
    let out = train_with_progress(&cfg, |e, l| eprintln!("epoch {e:2} loss {l:.4}"))?;
    eprintln!("trained in {:.1}s", t0.elapsed().as_secs_f64());
    let curve = evaluate_model(&out.system, channel, &[eval_db], 100_000, 7)?;
    let af = af_sum_rate(
        &QamConstellation::new(2)?,
        channel,
        eval_db,
        100_000,
        cfg.minibatch,
        &mut GaussianRng::seed_from_u64(7),
    )?;
    let mut rng = GaussianRng::seed_from_u64(9);
    let noise = pnc_core::channel::NoiseSpec::from_snr_db(eval_db)?;
    let mut l = 0.0;
    for _ in 0..800 {
        let b = pnc_core::system::Batch::sample(2, 128, channel, noise, &mut rng);
        l += out.system.forward_end_to_end(&b)?.loss;
    }
    println!("batch-stat eval rate {:.4}", 4.0 * (1.0 - l / 800.0));
    println!(
        "learned {:.4} af {:.4} (eval {eval_db} dB, total {:.1}s)",
        curve.entries[0].sum_rate_bps_hz,
        af.sum_rate,
        t0.elapsed().as_secs_f64()
    );
    Ok(())
}
