use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pnc_core::baselines::{af_sum_rate, QamConstellation};
use pnc_core::channel::{ChannelKind, ComplexCoef, GaussianRng};
use pnc_core::evaluation::{
    eval_rng, evaluate_model, extract_relay_constellation, extract_terminal_constellation, sweep_with,
    CurveEntry, SumRateCurve, SweepPlan,
};
use pnc_core::persist::{load_system, manifest_text, save_system};
use pnc_core::system::{train_with_progress, CsiMode, SystemConfig, TwoWaySystem};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::experiment::Experiment;

pub const AF_BLOCK: usize = 128;
pub const CURVE_FILE: &str = "curve.csv";
pub const LOSS_FILE: &str = "loss_history.csv";
pub const ENVELOPE_FILE: &str = "envelope.csv";

/// Writes through a temporary file so an interrupted run never leaves a
/// truncated artifact behind.
pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::new(3, format!("{}: {e}", path.display()));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, text).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn loss_history_csv(history: &[f64]) -> String {
    let mut out = String::from("epoch,mean_loss\n");
    for (e, l) in history.iter().enumerate() {
        writeln!(out, "{},{l:.6}", e + 1).unwrap();
    }
    out
}

fn train_into(config: &SystemConfig, dir: &Path, label: &str) -> Result<TwoWaySystem, CliError> {
    let out = train_with_progress(config, |e, l| {
        eprintln!("{label}epoch {:>3}/{} loss {l:.4}", e + 1, config.epochs)
    })?;
    save_system(&out.system, dir)?;
    write_file(&dir.join(LOSS_FILE), &loss_history_csv(&out.loss_history))?;
    Ok(out.system)
}

pub fn train(config: &Path, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let exp = Experiment::load(config, seed)?;
    train_into(&exp.system, out, "")?;
    eprintln!("wrote model to {}", out.display());
    Ok(())
}

pub fn eval(model: &Path, snr_db: &[f64], symbols: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    if snr_db.is_empty() {
        return Err(CliError::usage("--snr-db needs at least one value"));
    }
    let system = load_system(model)?;
    let curve = evaluate_model(&system, system.config.channel, snr_db, symbols, seed)?;
    write_file(out, &curve.to_csv())
}

/// Directory name of a sweep cell: a digest of everything that determines
/// its curve.
pub fn cell_key(config: &SystemConfig, plan: &SweepPlan) -> String {
    let mut h = Sha256::new();
    h.update(manifest_text(config));
    h.update(format!(
        "eval_grid_db={:?}\neval_symbols={}\neval_seed={}\n",
        plan.eval_grid_db, plan.eval_symbols, plan.eval_seed
    ));
    hex::encode(&h.finalize()[..8])
}

fn run_cell(config: &SystemConfig, plan: &SweepPlan, cell_dir: &Path) -> Result<SumRateCurve, CliError> {
    let curve_path = cell_dir.join(CURVE_FILE);
    if let Ok(text) = fs::read_to_string(&curve_path) {
        if let Ok(curve) = SumRateCurve::from_csv(&text) {
            return Ok(curve);
        }
    }
    let label = format!("[train {} dB, seed {}] ", config.train_snr_db, config.seed);
    let system = match load_system(cell_dir) {
        Ok(s) if s.config == *config => s,
        _ => train_into(config, cell_dir, &label)?,
    };
    let curve = evaluate_model(&system, config.channel, &plan.eval_grid_db, plan.eval_symbols, plan.eval_seed)?;
    write_file(&curve_path, &curve.to_csv())?;
    Ok(curve)
}

pub fn sweep(config: &Path, seed: Option<u64>, out: Option<PathBuf>, jobs: Option<usize>) -> Result<(), CliError> {
    let exp = Experiment::load(config, seed)?;
    let out = out
        .or(exp.out_dir.clone())
        .ok_or_else(|| CliError::usage("no output directory: pass --out or set out_dir"))?;
    let plan = SweepPlan {
        base: exp.system.clone(),
        train_grid_db: exp.train_grid_db.clone(),
        eval_grid_db: exp.eval_grid_db.clone(),
        seeds: exp.seeds.clone(),
        eval_symbols: exp.eval_symbols,
        eval_seed: exp.eval_seed,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::new(1, format!("worker pool: {e}")))?;

    let cells_dir = out.join("cells");
    let result = pool.install(|| {
        sweep_with(&plan, |_, cfg| {
            run_cell(cfg, &plan, &cells_dir.join(cell_key(cfg, &plan)))
                .map_err(|e| pnc_core::Error::State(e.msg))
        })
    })?;

    for m in &result.per_model {
        let name = format!("train_{}db_seed{}.csv", m.cell.train_snr_db, m.cell.seed);
        match &m.curve {
            Ok(curve) => write_file(&out.join("per_model").join(name), &curve.to_csv())?,
            Err(e) => eprintln!(
                "cell train {} dB, seed {} failed: {e}",
                m.cell.train_snr_db, m.cell.seed
            ),
        }
    }
    write_file(&out.join(ENVELOPE_FILE), &result.envelope.to_csv())?;
    let failed = result.failures().count();
    if failed > 0 {
        return Err(CliError::new(
            1,
            format!("{failed} of {} sweep cells failed", result.per_model.len()),
        ));
    }
    Ok(())
}

pub fn baseline_af(
    k_bits: usize,
    channel: ChannelKind,
    snr_db: &[f64],
    symbols: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    if snr_db.is_empty() {
        return Err(CliError::usage("--snr-db needs at least one value"));
    }
    let constellation = QamConstellation::new(k_bits)?;
    let mut curve = SumRateCurve::default();
    for &snr in snr_db {
        let mut rng = eval_rng(seed, snr);
        let r = af_sum_rate(&constellation, channel, snr, symbols, AF_BLOCK, &mut rng)?;
        curve.entries.push(CurveEntry {
            eval_snr_db: snr,
            best_train_snr_db: None,
            mean_loss: r.mean_loss,
            sum_rate_bps_hz: r.sum_rate,
        });
    }
    curve.sort();
    write_file(out, &curve.to_csv())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DumpMode {
    Terminal,
    Relay,
}

pub fn dump_constellation(
    model: &Path,
    mode: DumpMode,
    h_a: Option<ComplexCoef>,
    h_b: Option<ComplexCoef>,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let mut system = load_system(model)?;
    if mode == DumpMode::Relay
        && system.csi_mode() != CsiMode::NoCsi
        && (h_a.is_none() || h_b.is_none())
    {
        return Err(CliError::usage(format!(
            "relay dump of a {} model needs --h-a and --h-b",
            system.csi_mode().name()
        )));
    }
    let (channel, snr) = (system.config.channel, system.config.train_snr_db);
    system.calibrate(channel, snr, &mut GaussianRng::seed_from_u64(seed))?;
    let dump = match mode {
        DumpMode::Terminal => extract_terminal_constellation(&system)?,
        DumpMode::Relay => extract_relay_constellation(
            &system,
            h_a.unwrap_or(ComplexCoef::ONE),
            h_b.unwrap_or(ComplexCoef::ONE),
        )?,
    };
    write_file(out, &dump.to_csv())
}
