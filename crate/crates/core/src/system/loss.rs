//! Bitwise binary cross entropy on pre-sigmoid logits, in bits.
//!
//! With `l = σ(L)` read as P(b = 0), the per-bit loss is
//! `log₂(1 + exp(−(−1)^b · L))`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::mlp::{sigmoid, Matrix};

/// `ln(1 + eˣ)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sign(bit: f64) -> f64 {
    if bit == 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn bit_loss(logit: f64, bit: f64) -> f64 {
    softplus(-sign(bit) * logit) / LN_2
}

fn check(logits: &Matrix, bits: &Matrix) -> Result<()> {
    if logits.shape() != bits.shape() {
        return Err(Error::Config(format!(
            "logits {:?} and bits {:?} differ in shape",
            logits.shape(),
            bits.shape()
        )));
    }
    Ok(())
}

/// Sum of per-bit losses.
pub fn bce_loss_sum(logits: &Matrix, bits: &Matrix) -> Result<f64> {
    check(logits, bits)?;
    Ok(logits
        .data()
        .iter()
        .zip(bits.data())
        .map(|(&l, &b)| bit_loss(l, b))
        .sum())
}

/// Mean per-bit loss.
pub fn bce_loss(logits: &Matrix, bits: &Matrix) -> Result<f64> {
    Ok(bce_loss_sum(logits, bits)? / logits.data().len() as f64)
}

/// Gradient of `scale · bce_loss_sum` with respect to the logits.
pub fn bce_loss_grad(logits: &Matrix, bits: &Matrix, scale: f64) -> Result<Matrix> {
    check(logits, bits)?;
    let data = logits
        .data()
        .iter()
        .zip(bits.data())
        .map(|(&l, &b)| {
            let s = sign(b);
            -scale * s * sigmoid(-s * l) / LN_2
        })
        .collect();
    Matrix::from_vec(logits.rows(), logits.cols(), data)
}
