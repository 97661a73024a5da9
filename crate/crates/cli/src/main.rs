mod commands;
mod error;
mod experiment;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pnc_core::channel::{ChannelKind, ComplexCoef};

use commands::DumpMode;
use error::CliError;
use experiment::DEFAULT_EVAL_SYMBOLS;

/// Train, evaluate and benchmark learned two-way relay systems.
///
/// The master seed defaults to the PNC_LAB_SEED environment variable when
/// `--seed` is not given.
#[derive(Parser)]
#[command(name = "pnc-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one system and save its weights, manifest and loss history.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the sum rate of a saved system at one or more SNRs.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true, required = true)]
        snr_db: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_EVAL_SYMBOLS)]
        symbols: usize,
        /// Seed of the evaluation ensemble.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train over a grid of training SNRs and seeds and keep the best curve.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Parallel training jobs (default: logical core count).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Sum rate of amplify-and-forward relaying with QAM terminals.
    BaselineAf {
        #[arg(long = "mod", value_enum)]
        modulation: Modulation,
        #[arg(long, value_enum, default_value_t = Channel::Awgn)]
        channel: Channel,
        #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true, required = true)]
        snr_db: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_EVAL_SYMBOLS)]
        symbols: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the terminal or relay constellation of a saved system.
    DumpConstellation {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Channel A as RE,IM (default 1,0 for models without CSI).
        #[arg(long = "h-a", value_parser = parse_coef, allow_hyphen_values = true)]
        h_a: Option<ComplexCoef>,
        #[arg(long = "h-b", value_parser = parse_coef, allow_hyphen_values = true)]
        h_b: Option<ComplexCoef>,
        /// Seed of the power-normalization calibration ensemble.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Modulation {
    #[value(name = "4qam")]
    Qam4,
    #[value(name = "16qam")]
    Qam16,
}

#[derive(Clone, Copy, ValueEnum)]
enum Channel {
    Awgn,
    Rayleigh,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Terminal,
    Relay,
}

fn parse_coef(s: &str) -> Result<ComplexCoef, String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected RE,IM, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok(ComplexCoef::new(num(re)?, num(im)?))
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("PNC_LAB_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::usage(format!("PNC_LAB_SEED must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let master = |seed: Option<u64>| -> Result<Option<u64>, CliError> {
        Ok(match seed {
            Some(s) => Some(s),
            None => env_seed()?,
        })
    };
    match cli.command {
        Command::Train { config, seed, out } => commands::train(&config, master(seed)?, &out),
        Command::Eval { model, snr_db, symbols, seed, out } => {
            commands::eval(&model, &snr_db, symbols, master(seed)?.unwrap_or(0), &out)
        }
        Command::Sweep { config, seed, out, jobs } => commands::sweep(&config, master(seed)?, out, jobs),
        Command::BaselineAf { modulation, channel, snr_db, symbols, seed, out } => {
            let k = match modulation {
                Modulation::Qam4 => 2,
                Modulation::Qam16 => 4,
            };
            let channel = match channel {
                Channel::Awgn => ChannelKind::Awgn,
                Channel::Rayleigh => ChannelKind::BlockRayleigh,
            };
            commands::baseline_af(k, channel, &snr_db, symbols, master(seed)?.unwrap_or(0), &out)
        }
        Command::DumpConstellation { model, mode, h_a, h_b, seed, out } => {
            let mode = match mode {
                Mode::Terminal => DumpMode::Terminal,
                Mode::Relay => DumpMode::Relay,
            };
            commands::dump_constellation(&model, mode, h_a, h_b, master(seed)?.unwrap_or(0), &out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pnc-lab: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
