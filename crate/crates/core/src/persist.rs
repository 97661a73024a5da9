//! On-disk layout of a trained system.
//!
//! ```text
//! DIR/manifest.toml      version = 1, plus a [system] table with every config field
//! DIR/terminal_mod.txt   weight files in the `mlp::io` text format
//! DIR/relay_mod.txt
//! DIR/demod.txt
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::io as mlp_io;
use crate::system::{SystemConfig, TwoWaySystem};

pub const MANIFEST: &str = "manifest.toml";
pub const TERMINAL_FILE: &str = "terminal_mod.txt";
pub const RELAY_FILE: &str = "relay_mod.txt";
pub const DEMOD_FILE: &str = "demod.txt";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    version: u32,
    system: SystemConfig,
}

pub fn manifest_text(config: &SystemConfig) -> String {
    toml::to_string(&Manifest {
        version: MANIFEST_VERSION,
        system: config.clone(),
    })
    .expect("config serializes")
}

/// 1-based line of a byte offset.
pub fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<SystemConfig> {
    let m: Manifest = toml::from_str(text).map_err(|e| Error::Corrupt {
        path: path.into(),
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        msg: e.message().to_string(),
    })?;
    if m.version != MANIFEST_VERSION {
        return Err(Error::Corrupt {
            path: path.into(),
            line: 1,
            msg: format!("unsupported manifest version {}", m.version),
        });
    }
    m.system.validate()?;
    Ok(m.system)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_system(system: &TwoWaySystem, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join(MANIFEST), &manifest_text(&system.config))?;
    write(&dir.join(TERMINAL_FILE), &mlp_io::to_text(&system.terminal_mod))?;
    write(&dir.join(RELAY_FILE), &mlp_io::to_text(&system.relay_mod))?;
    write(&dir.join(DEMOD_FILE), &mlp_io::to_text(&system.demod))
}

/// Loads a saved system. Networks whose shapes disagree with the manifest
/// are reported as corrupt against the offending weight file.
pub fn load_system(dir: &Path) -> Result<TwoWaySystem> {
    let mpath = dir.join(MANIFEST);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let config = parse_manifest(&text, &mpath)?;
    let terminal = mlp_io::load(&dir.join(TERMINAL_FILE))?;
    let relay = mlp_io::load(&dir.join(RELAY_FILE))?;
    let demod = mlp_io::load(&dir.join(DEMOD_FILE))?;
    TwoWaySystem::from_networks(config, terminal, relay, demod).map_err(|e| match e {
        Error::Config(msg) => {
            let file = if msg.starts_with("terminal") {
                TERMINAL_FILE
            } else if msg.starts_with("relay") {
                RELAY_FILE
            } else if msg.starts_with("demod") {
                DEMOD_FILE
            } else {
                MANIFEST
            };
            Error::Corrupt {
                path: dir.join(file),
                line: 1,
                msg,
            }
        }
        other => other,
    })
}
