//! Input feature builders for the relay mapper and the terminal demodulator,
//! with the matching gradient routing.
//!
//! Relay, perfect CSI (18 columns, complex values as re/im pairs):
//! `Y_R, H_A, H_A·Y_R, H_B, H_B·Y_R, H_A*·Y_R, H_B*·Y_R, H_A⁻¹·Y_R, H_B⁻¹·Y_R`.
//! The ideal relay appends `S_A, X_A, S_B, X_B` (bits as ±1).
//!
//! Demodulator: `own bits (±1), own symbol, Y`, and with CSI additionally
//! `H, H*·Y, H⁻¹·Y`.

use super::config::CsiMode;
use crate::channel::{complex_mul, complex_mul_adjoint, ComplexCoef};
use crate::error::{Error, Result};
use crate::mlp::Matrix;

/// Maps {0, 1} bits to network inputs: 0 → +1, 1 → −1.
pub fn bits_to_pm1(bits: &Matrix) -> Result<Matrix> {
    if let Some(v) = bits.data().iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::Input(format!("bits must be 0 or 1, found {v}")));
    }
    Ok(bits.map(|b| 1.0 - 2.0 * b))
}

pub fn relay_feature_width(mode: CsiMode, k_bits: usize) -> usize {
    match mode {
        CsiMode::NoCsi => 2,
        CsiMode::PerfectCsi => 18,
        CsiMode::IdealRelay => 18 + 2 * k_bits + 4,
    }
}

pub fn demod_feature_width(mode: CsiMode, k_bits: usize) -> usize {
    match mode {
        CsiMode::NoCsi => k_bits + 4,
        _ => k_bits + 10,
    }
}

/// Source information the ideal relay is allowed to see.
#[derive(Clone, Copy, Debug)]
pub struct SideInfo<'a> {
    /// ±1 encoded bits of terminal A.
    pub s_a: &'a Matrix,
    pub x_a: &'a Matrix,
    pub s_b: &'a Matrix,
    pub x_b: &'a Matrix,
}

#[derive(Clone, Copy)]
enum Block {
    /// A constant complex value broadcast to every row.
    Const(ComplexCoef),
    /// `c · y`, linear in the received signal.
    Scaled(ComplexCoef),
}

fn relay_csi_blocks(h_a: ComplexCoef, h_b: ComplexCoef) -> Result<Vec<Block>> {
    use Block::*;
    Ok(vec![
        Scaled(ComplexCoef::ONE),
        Const(h_a),
        Scaled(h_a),
        Const(h_b),
        Scaled(h_b),
        Scaled(h_a.conj()),
        Scaled(h_b.conj()),
        Scaled(h_a.inv()?),
        Scaled(h_b.inv()?),
    ])
}

fn demod_csi_blocks(h: ComplexCoef) -> Result<Vec<Block>> {
    Ok(vec![Block::Const(h), Block::Scaled(h.conj()), Block::Scaled(h.inv()?)])
}

fn build_blocks(y: &Matrix, blocks: &[Block]) -> Matrix {
    let mut out = Matrix::zeros(y.rows(), 2 * blocks.len());
    for (b, block) in blocks.iter().enumerate() {
        match *block {
            Block::Const(c) => {
                for i in 0..y.rows() {
                    out.row_mut(i)[2 * b..2 * b + 2].copy_from_slice(&[c.re, c.im]);
                }
            }
            Block::Scaled(c) => {
                let part = complex_mul(c, y);
                for i in 0..y.rows() {
                    out.row_mut(i)[2 * b..2 * b + 2].copy_from_slice(part.row(i));
                }
            }
        }
    }
    out
}

/// Accumulates `Σ conj(c)·g_block` over the `Scaled` blocks of `grad`,
/// whose columns `start..start + 2·len` hold the block gradients.
fn blocks_backward(grad: &Matrix, start: usize, blocks: &[Block]) -> Matrix {
    let mut gy = Matrix::zeros(grad.rows(), 2);
    for (b, block) in blocks.iter().enumerate() {
        if let Block::Scaled(c) = *block {
            gy.add_assign(&complex_mul_adjoint(c, &grad.columns(start + 2 * b, 2)));
        }
    }
    gy
}

pub fn relay_features(
    y_r: &Matrix,
    h_a: ComplexCoef,
    h_b: ComplexCoef,
    mode: CsiMode,
    side: Option<SideInfo<'_>>,
) -> Result<Matrix> {
    if y_r.cols() != 2 {
        return Err(Error::Config(format!("relay input needs 2 columns, got {}", y_r.cols())));
    }
    match mode {
        CsiMode::NoCsi => Ok(y_r.clone()),
        CsiMode::PerfectCsi => Ok(build_blocks(y_r, &relay_csi_blocks(h_a, h_b)?)),
        CsiMode::IdealRelay => {
            let s = side.ok_or_else(|| {
                Error::Config("ideal relay features need the source side information".into())
            })?;
            let csi = build_blocks(y_r, &relay_csi_blocks(h_a, h_b)?);
            Matrix::hconcat(&[&csi, s.s_a, s.x_a, s.s_b, s.x_b])
        }
    }
}

/// Gradient routing for [`relay_features`].
#[derive(Clone, Debug)]
pub struct RelayFeatureGrads {
    pub y_r: Matrix,
    /// Gradients reaching X_A and X_B through the ideal relay's side inputs.
    pub side_symbols: Option<(Matrix, Matrix)>,
}

pub fn relay_features_backward(
    grad: &Matrix,
    h_a: ComplexCoef,
    h_b: ComplexCoef,
    mode: CsiMode,
    k_bits: usize,
) -> Result<RelayFeatureGrads> {
    if grad.cols() != relay_feature_width(mode, k_bits) {
        return Err(Error::Config("relay feature gradient width mismatch".into()));
    }
    Ok(match mode {
        CsiMode::NoCsi => RelayFeatureGrads {
            y_r: grad.clone(),
            side_symbols: None,
        },
        CsiMode::PerfectCsi => RelayFeatureGrads {
            y_r: blocks_backward(grad, 0, &relay_csi_blocks(h_a, h_b)?),
            side_symbols: None,
        },
        CsiMode::IdealRelay => {
            let y_r = blocks_backward(grad, 0, &relay_csi_blocks(h_a, h_b)?);
            let xa_at = 18 + k_bits;
            let xb_at = xa_at + 2 + k_bits;
            RelayFeatureGrads {
                y_r,
                side_symbols: Some((grad.columns(xa_at, 2), grad.columns(xb_at, 2))),
            }
        }
    })
}

pub fn demod_features(
    own_pm1: &Matrix,
    own_symbols: &Matrix,
    y: &Matrix,
    h_own: ComplexCoef,
    mode: CsiMode,
) -> Result<Matrix> {
    let base = Matrix::hconcat(&[own_pm1, own_symbols, y])?;
    if !mode.has_csi() {
        return Ok(base);
    }
    let csi = build_blocks(y, &demod_csi_blocks(h_own)?);
    Matrix::hconcat(&[&base, &csi])
}

/// Gradients of the demodulator input with respect to (own symbols, y).
pub fn demod_features_backward(
    grad: &Matrix,
    h_own: ComplexCoef,
    mode: CsiMode,
    k_bits: usize,
) -> Result<(Matrix, Matrix)> {
    if grad.cols() != demod_feature_width(mode, k_bits) {
        return Err(Error::Config("demod feature gradient width mismatch".into()));
    }
    let g_sym = grad.columns(k_bits, 2);
    let mut g_y = grad.columns(k_bits + 2, 2);
    if mode.has_csi() {
        g_y.add_assign(&blocks_backward(grad, k_bits + 4, &demod_csi_blocks(h_own)?));
    }
    Ok((g_sym, g_y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn bit_encoding() {
        let b = m(&[&[0.0, 1.0]]);
        assert_eq!(bits_to_pm1(&b).unwrap().row(0), &[1.0, -1.0]);
        assert!(matches!(bits_to_pm1(&m(&[&[0.5, 1.0]])), Err(Error::Input(_))));
    }

    #[test]
    fn no_csi_passes_through() {
        let y = m(&[&[0.3, -0.4], &[1.0, 2.0]]);
        let f = relay_features(&y, ComplexCoef::ONE, ComplexCoef::ONE, CsiMode::NoCsi, None).unwrap();
        assert_eq!(f, y);
    }

    #[test]
    fn perfect_csi_with_unit_channels() {
        let (p, q) = (0.25, -1.5);
        let y = m(&[&[p, q]]);
        let f = relay_features(&y, ComplexCoef::ONE, ComplexCoef::ONE, CsiMode::PerfectCsi, None).unwrap();
        let expected = [p, q, 1.0, 0.0, p, q, 1.0, 0.0, p, q, p, q, p, q, p, q, p, q];
        assert_eq!(f.row(0), &expected);
    }

    #[test]
    fn widths() {
        assert_eq!(relay_feature_width(CsiMode::PerfectCsi, 2), 18);
        assert_eq!(relay_feature_width(CsiMode::IdealRelay, 2), 26);
        assert_eq!(demod_feature_width(CsiMode::NoCsi, 2), 6);
        assert_eq!(demod_feature_width(CsiMode::PerfectCsi, 2), 12);

        let y = m(&[&[0.1, 0.2]]);
        let s = m(&[&[1.0, -1.0]]);
        let x = m(&[&[0.5, 0.5]]);
        let side = SideInfo { s_a: &s, x_a: &x, s_b: &s, x_b: &x };
        let f = relay_features(&y, ComplexCoef::ONE, ComplexCoef::ONE, CsiMode::IdealRelay, Some(side)).unwrap();
        assert_eq!(f.cols(), 26);
        let d = demod_features(&s, &x, &y, ComplexCoef::ONE, CsiMode::PerfectCsi).unwrap();
        assert_eq!(d.cols(), 12);
        assert_eq!(d.row(0)[6..], [1.0, 0.0, 0.1, 0.2, 0.1, 0.2]);
    }

    #[test]
    fn ideal_relay_requires_side_info() {
        let y = m(&[&[0.1, 0.2]]);
        let r = relay_features(&y, ComplexCoef::ONE, ComplexCoef::ONE, CsiMode::IdealRelay, None);
        assert!(r.is_err());
    }

    #[test]
    fn degenerate_channel_rejected() {
        let y = m(&[&[0.1, 0.2]]);
        let tiny = ComplexCoef::new(1e-9, 0.0);
        let r = relay_features(&y, tiny, ComplexCoef::ONE, CsiMode::PerfectCsi, None);
        assert!(matches!(r, Err(Error::DegenerateChannel(_))));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let h_a = ComplexCoef::new(0.7, -0.4);
        let h_b = ComplexCoef::new(-1.1, 0.3);
        let y = m(&[&[0.3, -0.2], &[1.4, 0.9]]);
        let w = Matrix::from_vec(2, 18, (0..36).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect()).unwrap();
        let loss = |y: &Matrix| -> f64 {
            let f = relay_features(y, h_a, h_b, CsiMode::PerfectCsi, None).unwrap();
            f.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
        };
        let g = relay_features_backward(&w, h_a, h_b, CsiMode::PerfectCsi, 2).unwrap().y_r;
        for i in 0..4 {
            let mut p = y.clone();
            p.data_mut()[i] += 1e-6;
            let mut q = y.clone();
            q.data_mut()[i] -= 1e-6;
            let fd = (loss(&p) - loss(&q)) / 2e-6;
            assert!((fd - g.data()[i]).abs() < 1e-6 * fd.abs().max(1.0), "{fd} {}", g.data()[i]);
        }
    }
}
