//! Sum-rate estimation, training-SNR sweeps and constellation extraction.
//!
//! The sum rate of a two-terminal exchange with K bits per symbol is
//! `2K · (1 − loss)` where `loss` is the mean bitwise cross entropy of the
//! demodulator outputs, i.e. `2K · GMI`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::channel::{ChannelKind, ComplexCoef, GaussianRng, NoiseSpec};
use crate::error::{Error, Result};
use crate::mlp::Matrix;
use crate::system::features::{bits_to_pm1, relay_features, SideInfo};
use crate::system::{bce_loss, Batch, CsiMode, SystemConfig, TwoWaySystem};

/// GMI per bit from LLRs (`L = ln P(b=0)/P(b=1)`) and the true bits.
pub fn gmi_from_llrs(llrs: &Matrix, bits: &Matrix) -> Result<f64> {
    Ok(1.0 - bce_loss(llrs, bits)?)
}

/// `2K(1 − loss)`, clipped to the achievable range `[0, 2K]`.
pub fn sum_rate_from_loss(k_bits: usize, mean_loss: f64) -> f64 {
    let max = 2.0 * k_bits as f64;
    (max * (1.0 - mean_loss)).clamp(0.0, max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePoint {
    pub mean_loss: f64,
    pub sum_rate: f64,
}

/// Monte Carlo sum rate of a calibrated system at one operating point.
///
/// Symbols are processed in blocks of the system's mini-batch size; each
/// block draws bits, then a channel pair, then the three noise vectors.
pub fn estimate_sum_rate(
    system: &TwoWaySystem,
    channel: ChannelKind,
    eval_snr_db: f64,
    n_symbols: usize,
    rng: &mut GaussianRng,
) -> Result<RatePoint> {
    if !system.is_calibrated() {
        return Err(Error::State(
            "power normalization must be calibrated before evaluation".into(),
        ));
    }
    if n_symbols == 0 {
        return Err(Error::Config("need at least one evaluation symbol".into()));
    }
    let k = system.k_bits();
    let noise = NoiseSpec::from_snr_db(eval_snr_db)?;
    let block = system.config.minibatch;
    let mut loss_sum = 0.0;
    let mut start = 0;
    while start < n_symbols {
        let n = block.min(n_symbols - start);
        let batch = Batch::sample(k, n, channel, noise, rng);
        let (at_a, at_b) = system.simulate(&batch)?;
        loss_sum += bce_loss(&at_a, &batch.bits_b)? * (n * k) as f64;
        loss_sum += bce_loss(&at_b, &batch.bits_a)? * (n * k) as f64;
        start += n;
    }
    let mean_loss = loss_sum / (2 * n_symbols * k) as f64;
    Ok(RatePoint {
        mean_loss,
        sum_rate: sum_rate_from_loss(k, mean_loss),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveEntry {
    pub eval_snr_db: f64,
    /// `None` for systems that are not trained (baselines).
    pub best_train_snr_db: Option<f64>,
    pub mean_loss: f64,
    pub sum_rate_bps_hz: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SumRateCurve {
    pub entries: Vec<CurveEntry>,
}

pub const CURVE_HEADER: &str = "eval_snr_db,best_train_snr_db,mean_loss,sum_rate_bps_hz";

impl SumRateCurve {
    pub fn sort(&mut self) {
        self.entries
            .sort_by(|a, b| a.eval_snr_db.total_cmp(&b.eval_snr_db));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_HEADER);
        out.push('\n');
        for e in &self.entries {
            let train = e
                .best_train_snr_db
                .map_or_else(|| "NA".to_string(), |t| format!("{t:.6}"));
            writeln!(
                out,
                "{:.6},{},{:.6},{:.6}",
                e.eval_snr_db, train, e.mean_loss, e.sum_rate_bps_hz
            )
            .unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let corrupt = |line: usize, msg: String| Error::Corrupt {
            path: "<csv>".into(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CURVE_HEADER => {}
            _ => return Err(corrupt(1, "missing sum-rate header".into())),
        }
        let mut entries = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(corrupt(i + 1, format!("expected 4 fields, got {}", f.len())));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| corrupt(i + 1, format!("bad number `{s}`")))
            };
            entries.push(CurveEntry {
                eval_snr_db: num(f[0])?,
                best_train_snr_db: if f[1].trim() == "NA" { None } else { Some(num(f[1])?) },
                mean_loss: num(f[2])?,
                sum_rate_bps_hz: num(f[3])?,
            });
        }
        Ok(SumRateCurve { entries })
    }

    pub fn rate_at(&self, eval_snr_db: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.eval_snr_db == eval_snr_db)
            .map(|e| e.sum_rate_bps_hz)
    }
}

/// Evaluation stream for one SNR point. Keyed by the SNR value, so a point
/// sees the same ensemble whatever grid it is part of, and every model is
/// compared on common channel and noise draws.
pub fn eval_rng(eval_seed: u64, snr_db: f64) -> GaussianRng {
    GaussianRng::stream(eval_seed, snr_db.to_bits())
}

/// Evaluates a trained system over `eval_grid`. Before each point the
/// power normalizations are recalibrated at that point's SNR.
pub fn evaluate_model(
    system: &TwoWaySystem,
    channel: ChannelKind,
    eval_grid_db: &[f64],
    n_symbols: usize,
    eval_seed: u64,
) -> Result<SumRateCurve> {
    let mut entries = Vec::with_capacity(eval_grid_db.len());
    for &snr in eval_grid_db {
        let mut rng = eval_rng(eval_seed, snr);
        let mut sys = system.clone();
        sys.calibrate(channel, snr, &mut rng)?;
        let p = estimate_sum_rate(&sys, channel, snr, n_symbols, &mut rng)?;
        entries.push(CurveEntry {
            eval_snr_db: snr,
            best_train_snr_db: Some(system.config.train_snr_db),
            mean_loss: p.mean_loss,
            sum_rate_bps_hz: p.sum_rate,
        });
    }
    let mut c = SumRateCurve { entries };
    c.sort();
    Ok(c)
}

/// Pointwise best over per-model curves sharing one evaluation grid.
/// Ties go to the lower training SNR.
pub fn envelope(curves: &[SumRateCurve]) -> SumRateCurve {
    let mut best: Vec<CurveEntry> = Vec::new();
    for curve in curves {
        for e in &curve.entries {
            match best.iter_mut().find(|b| b.eval_snr_db == e.eval_snr_db) {
                None => best.push(*e),
                Some(b) => {
                    let better = e.sum_rate_bps_hz > b.sum_rate_bps_hz
                        || (e.sum_rate_bps_hz == b.sum_rate_bps_hz
                            && e.best_train_snr_db.unwrap_or(f64::INFINITY)
                                < b.best_train_snr_db.unwrap_or(f64::INFINITY));
                    if better {
                        *b = *e;
                    }
                }
            }
        }
    }
    let mut c = SumRateCurve { entries: best };
    c.sort();
    c
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepCell {
    pub train_snr_db: f64,
    pub seed: u64,
}

#[derive(Debug)]
pub struct ModelCurve {
    pub cell: SweepCell,
    pub curve: Result<SumRateCurve>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub envelope: SumRateCurve,
    /// In (train SNR, seed) grid order.
    pub per_model: Vec<ModelCurve>,
}

impl SweepResult {
    pub fn failures(&self) -> impl Iterator<Item = &ModelCurve> {
        self.per_model.iter().filter(|m| m.curve.is_err())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub base: SystemConfig,
    pub train_grid_db: Vec<f64>,
    pub eval_grid_db: Vec<f64>,
    pub seeds: Vec<u64>,
    pub eval_symbols: usize,
    pub eval_seed: u64,
}

impl SweepPlan {
    pub fn cells(&self) -> Vec<SweepCell> {
        self.train_grid_db
            .iter()
            .flat_map(|&t| self.seeds.iter().map(move |&s| SweepCell { train_snr_db: t, seed: s }))
            .collect()
    }

    pub fn cell_config(&self, cell: SweepCell) -> SystemConfig {
        SystemConfig {
            train_snr_db: cell.train_snr_db,
            seed: cell.seed,
            ..self.base.clone()
        }
    }
}

/// Runs `run_cell` for every (train SNR, seed) cell and reports the best
/// sum rate over all cells at each evaluation SNR.
///
/// Cells run in parallel on the current rayon pool. A failing cell is
/// reported in `per_model` and left out of the envelope.
pub fn sweep_with<F>(plan: &SweepPlan, run_cell: F) -> Result<SweepResult>
where
    F: Fn(SweepCell, &SystemConfig) -> Result<SumRateCurve> + Sync,
{
    if plan.train_grid_db.is_empty() || plan.eval_grid_db.is_empty() || plan.seeds.is_empty() {
        return Err(Error::Config("sweep grids and seeds must be non-empty".into()));
    }
    let per_model: Vec<ModelCurve> = plan
        .cells()
        .into_par_iter()
        .map(|cell| ModelCurve {
            cell,
            curve: run_cell(cell, &plan.cell_config(cell)),
        })
        .collect();
    let ok: Vec<SumRateCurve> = per_model
        .iter()
        .filter_map(|m| m.curve.as_ref().ok().cloned())
        .collect();
    Ok(SweepResult {
        envelope: envelope(&ok),
        per_model,
    })
}

/// Trains and evaluates one model per cell.
pub fn train_and_evaluate(plan: &SweepPlan, config: &SystemConfig) -> Result<SumRateCurve> {
    let sys = crate::system::train(config)?.system;
    evaluate_model(&sys, plan.base.channel, &plan.eval_grid_db, plan.eval_symbols, plan.eval_seed)
}

pub fn sweep(plan: &SweepPlan) -> Result<SweepResult> {
    sweep_with(plan, |_, cfg| train_and_evaluate(plan, cfg))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoint {
    pub label: String,
    pub i: f64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstellationDump {
    pub points: Vec<LabeledPoint>,
    pub train_snr_db: f64,
    pub csi_mode: CsiMode,
    pub h_a: ComplexCoef,
    pub h_b: ComplexCoef,
}

pub const CONSTELLATION_HEADER: &str = "label_bits,i,q";

impl ConstellationDump {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CONSTELLATION_HEADER);
        out.push('\n');
        for p in &self.points {
            writeln!(out, "{},{:.6},{:.6}", p.label, p.i, p.q).unwrap();
        }
        out
    }

    pub fn points_from_csv(text: &str) -> Result<Vec<LabeledPoint>> {
        let corrupt = |line: usize, msg: String| Error::Corrupt {
            path: "<csv>".into(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CONSTELLATION_HEADER => {}
            _ => return Err(corrupt(1, "missing constellation header".into())),
        }
        lines
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, line)| {
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 3 || !f[0].chars().all(|c| c == '0' || c == '1') {
                    return Err(corrupt(i + 1, format!("bad row `{line}`")));
                }
                let num = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|_| corrupt(i + 1, format!("bad number `{s}`")))
                };
                Ok(LabeledPoint {
                    label: f[0].to_string(),
                    i: num(f[1])?,
                    q: num(f[2])?,
                })
            })
            .collect()
    }

    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(|p| p.i * p.i + p.q * p.q).sum::<f64>() / self.points.len() as f64
    }
}

fn bit_string(row: &[f64]) -> String {
    row.iter().map(|b| if *b == 0.0 { '0' } else { '1' }).collect()
}

/// The terminal constellation: M evaluated on every bit pattern.
pub fn extract_terminal_constellation(system: &TwoWaySystem) -> Result<ConstellationDump> {
    if !system.is_calibrated() {
        return Err(Error::State("constellation extraction needs a calibrated system".into()));
    }
    let patterns = crate::system::bit_patterns(system.k_bits());
    let x = system.terminal_modulate(&patterns)?;
    let points = patterns
        .iter_rows()
        .zip(x.iter_rows())
        .map(|(b, p)| LabeledPoint {
            label: bit_string(b),
            i: p[0],
            q: p[1],
        })
        .collect();
    Ok(ConstellationDump {
        points,
        train_snr_db: system.config.train_snr_db,
        csi_mode: system.csi_mode(),
        h_a: ComplexCoef::ONE,
        h_b: ComplexCoef::ONE,
    })
}

/// Relay transmit points for every noiseless superposition
/// `H_A·M(s_a) + H_B·M(s_b)`, labelled by the bits of `s_a` then `s_b`.
pub fn extract_relay_constellation(
    system: &TwoWaySystem,
    h_a: ComplexCoef,
    h_b: ComplexCoef,
) -> Result<ConstellationDump> {
    if !system.is_calibrated() {
        return Err(Error::State("constellation extraction needs a calibrated system".into()));
    }
    let (y_r, bits_a, bits_b) = system.noiseless_superpositions(h_a, h_b)?;
    let s_a = bits_to_pm1(&bits_a)?;
    let s_b = bits_to_pm1(&bits_b)?;
    let x_a = system.terminal_modulate(&bits_a)?;
    let x_b = system.terminal_modulate(&bits_b)?;
    let side = SideInfo {
        s_a: &s_a,
        x_a: &x_a,
        s_b: &s_b,
        x_b: &x_b,
    };
    let feats = relay_features(&y_r, h_a, h_b, system.csi_mode(), Some(side))?;
    let x_r = system.relay_modulate(&feats)?;
    let points = (0..x_r.rows())
        .map(|i| LabeledPoint {
            label: format!("{}{}", bit_string(bits_a.row(i)), bit_string(bits_b.row(i))),
            i: x_r.get(i, 0),
            q: x_r.get(i, 1),
        })
        .collect();
    Ok(ConstellationDump {
        points,
        train_snr_db: system.config.train_snr_db,
        csi_mode: system.csi_mode(),
        h_a,
        h_b,
    })
}

/// Mean and standard error of the per-bit loss over `groups` disjoint
/// sub-ensembles, for checking Monte Carlo precision.
pub fn batch_means(
    system: &TwoWaySystem,
    channel: ChannelKind,
    eval_snr_db: f64,
    n_symbols: usize,
    groups: usize,
    rng: &mut GaussianRng,
) -> Result<(f64, f64)> {
    let per = n_symbols / groups.max(1);
    let means: Vec<f64> = (0..groups)
        .map(|_| estimate_sum_rate(system, channel, eval_snr_db, per, rng).map(|p| p.mean_loss))
        .collect::<Result<_>>()?;
    let g = means.len() as f64;
    let mean = means.iter().sum::<f64>() / g;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (g - 1.0);
    Ok((mean, (var / g).sqrt()))
}
