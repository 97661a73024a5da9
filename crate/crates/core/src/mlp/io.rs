//! Text weight files.
//!
//! ```text
//! pnc-mlp 1 layers=5 input=2
//! dense 2 3
//! w 1.0000000000000000e0 -2.5000000000000000e-1 ...   (one line per weight row)
//! b 0.0000000000000000e0 ...
//! act tanh
//! dense 3 2
//! ...
//! powernorm calibrated 7.0710678118654746e-1
//! ```
//!
//! Values carry 17 significant digits, which is enough for every `f64` to
//! survive a write/parse cycle bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::matrix::Matrix;
use super::network::{ActivationKind, DenseLayer, Layer, MlpNetwork, PowerNormLayer, PowerNormMode};
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "pnc-mlp";
pub const FORMAT_VERSION: u32 = 1;

fn push_values(out: &mut String, tag: &str, values: &[f64]) {
    out.push_str(tag);
    for v in values {
        write!(out, " {v:.16e}").unwrap();
    }
    out.push('\n');
}

pub fn to_text(net: &MlpNetwork) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{FORMAT_TAG} {FORMAT_VERSION} layers={} input={}",
        net.layers().len(),
        net.input_dim()
    )
    .unwrap();
    for layer in net.layers() {
        match layer {
            Layer::Dense(d) => {
                writeln!(out, "dense {} {}", d.in_dim(), d.out_dim()).unwrap();
                for row in d.weights.iter_rows() {
                    push_values(&mut out, "w", row);
                }
                push_values(&mut out, "b", &d.bias);
            }
            Layer::Activation(a) => writeln!(out, "act {}", a.name()).unwrap(),
            Layer::PowerNorm(p) => match p.mode {
                PowerNormMode::BatchStatistic => writeln!(out, "powernorm batch").unwrap(),
                PowerNormMode::Calibrated(s) => {
                    writeln!(out, "powernorm calibrated {s:.16e}").unwrap()
                }
            },
        }
    }
    out
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    if !l.trim().is_empty() {
                        return Ok(l.trim());
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Corrupt {
            path: self.path.to_path_buf(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn values(&self, tag: &str, line: &str, expected: usize) -> Result<Vec<f64>> {
        let mut parts = line.split_ascii_whitespace();
        if parts.next() != Some(tag) {
            return Err(self.err(format!("expected `{tag}` line")));
        }
        let vals: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.err(format!("bad number `{p}`")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", vals.len())));
        }
        Ok(vals)
    }
}

fn parse_count(lines: &Lines, s: &str, key: &str) -> Result<usize> {
    s.strip_prefix(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| lines.err(format!("expected `{key}<count>`")))
}

/// Parses a weight file body. `path` is used only for error messages.
pub fn from_text(text: &str, path: &Path) -> Result<MlpNetwork> {
    let mut lines = Lines {
        path,
        inner: text.lines().enumerate(),
        line: 0,
    };
    let header = lines.next()?;
    let fields: Vec<&str> = header.split_ascii_whitespace().collect();
    if fields.len() != 4 || fields[0] != FORMAT_TAG {
        return Err(lines.err(format!("missing `{FORMAT_TAG}` header")));
    }
    if fields[1] != FORMAT_VERSION.to_string() {
        return Err(lines.err(format!("unsupported format version `{}`", fields[1])));
    }
    let n_layers = parse_count(&lines, fields[2], "layers=")?;
    let input_dim = parse_count(&lines, fields[3], "input=")?;

    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let line = lines.next()?;
        let parts: Vec<&str> = line.split_ascii_whitespace().collect();
        let layer = match parts.as_slice() {
            ["dense", i, o] => {
                let (i, o): (usize, usize) = match (i.parse(), o.parse()) {
                    (Ok(i), Ok(o)) if i > 0 && o > 0 => (i, o),
                    _ => return Err(lines.err("bad dense dimensions")),
                };
                let mut w = Vec::with_capacity(i * o);
                for _ in 0..i {
                    let l = lines.next()?;
                    w.extend(lines.values("w", l, o)?);
                }
                let l = lines.next()?;
                let b = lines.values("b", l, o)?;
                Layer::Dense(DenseLayer::new(Matrix::from_vec(i, o, w)?, b)?)
            }
            ["act", name] => Layer::Activation(
                ActivationKind::parse(name)
                    .ok_or_else(|| lines.err(format!("unknown activation `{name}`")))?,
            ),
            ["powernorm", "batch"] => Layer::PowerNorm(PowerNormLayer::batch()),
            ["powernorm", "calibrated", s] => {
                let s: f64 = s
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| lines.err(format!("bad calibrated scale `{s}`")))?;
                Layer::PowerNorm(PowerNormLayer {
                    mode: PowerNormMode::Calibrated(s),
                })
            }
            _ => return Err(lines.err(format!("unrecognized layer line `{line}`"))),
        };
        layers.push(layer);
    }
    if let Ok(extra) = lines.next() {
        return Err(lines.err(format!("trailing content `{extra}`")));
    }
    MlpNetwork::from_layers(input_dim, layers).map_err(|e| Error::Corrupt {
        path: path.to_path_buf(),
        line: 1,
        msg: e.to_string(),
    })
}

pub fn save(net: &MlpNetwork, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(net)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<MlpNetwork> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_net(seed: u64) -> MlpNetwork {
        let acts = [ActivationKind::Relu, ActivationKind::Tanh, ActivationKind::Sigmoid];
        MlpNetwork::init(&[3, 4, 5, 2], &acts, seed).unwrap()
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), scale in 1e-300f64..1e300, calibrate in any::<bool>()) {
            let mut net = sample_net(seed).with_power_norm();
            for p in net.params_mut() {
                for v in p.iter_mut() {
                    *v *= scale;
                }
            }
            if calibrate {
                net.set_power_norm_mode(PowerNormMode::Calibrated(scale.sqrt()));
            }
            let text = to_text(&net);
            let back = from_text(&text, Path::new("mem")).unwrap();
            prop_assert_eq!(&back, &net);
            prop_assert_eq!(to_text(&back), text);
        }
    }

    #[test]
    fn corrupt_value_names_line() {
        let text = to_text(&sample_net(1));
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[3] = lines[3].replacen(' ', " x", 1);
        let err = from_text(&lines.join("\n"), Path::new("m.txt")).unwrap_err();
        match err {
            Error::Corrupt { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let text = to_text(&sample_net(2));
        let cut: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(matches!(from_text(&cut, Path::new("m")), Err(Error::Corrupt { .. })));
    }

    #[test]
    fn wrong_version_rejected() {
        let text = to_text(&sample_net(3)).replacen("pnc-mlp 1", "pnc-mlp 9", 1);
        let err = from_text(&text, Path::new("m")).unwrap_err();
        assert!(err.to_string().contains("version"));
    }
}
