//! Reference systems: Gray-labelled square QAM, amplify-and-forward relaying
//! with exact bitwise soft demapping, and the BPSK denoising map.

use crate::channel::{apply_bc, apply_ma, sample_awgn, ChannelKind, ComplexCoef, GaussianRng, NoiseSpec};
use crate::error::{Error, Result};
use crate::evaluation::sum_rate_from_loss;
use crate::mlp::Matrix;
use crate::system::{bce_loss, random_bits};

/// Soft outputs are clipped to this magnitude.
pub const LLR_CLAMP: f64 = 1e4;

/// Unit-energy constellation indexed by label (bits read MSB first).
#[derive(Clone, Debug, PartialEq)]
pub struct QamConstellation {
    k_bits: usize,
    points: Vec<ComplexCoef>,
}

/// Per-axis Gray levels for `bits` bits, before energy scaling.
/// Bit value 0 in the leading position selects the positive half.
fn axis_level(bits: &[u8]) -> f64 {
    match bits {
        [] => 0.0,
        [b] => {
            if *b == 0 {
                1.0
            } else {
                -1.0
            }
        }
        [b0, b1] => {
            let sign = if *b0 == 0 { 1.0 } else { -1.0 };
            let mag = if *b1 == 0 { 3.0 } else { 1.0 };
            sign * mag
        }
        _ => unreachable!("at most two bits per axis"),
    }
}

impl QamConstellation {
    /// BPSK (k = 1), 4-QAM (k = 2) or 16-QAM (k = 4).
    pub fn new(k_bits: usize) -> Result<Self> {
        let (i_bits, norm) = match k_bits {
            1 => (1, 1.0),
            2 => (1, std::f64::consts::FRAC_1_SQRT_2),
            4 => (2, 1.0 / 10f64.sqrt()),
            _ => return Err(Error::Config(format!("no square QAM for k = {k_bits}"))),
        };
        let points = (0..1usize << k_bits)
            .map(|label| {
                let bits = label_bits(label, k_bits);
                let i = axis_level(&bits[..i_bits]);
                let q = axis_level(&bits[i_bits..]);
                ComplexCoef::new(i * norm, q * norm)
            })
            .collect();
        Ok(QamConstellation { k_bits, points })
    }

    pub fn k_bits(&self) -> usize {
        self.k_bits
    }

    pub fn points(&self) -> &[ComplexCoef] {
        &self.points
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn modulate(&self, bits: &[u8]) -> ComplexCoef {
        assert_eq!(bits.len(), self.k_bits);
        self.points[bits_label(bits)]
    }

    /// Rows of {0, 1} bits to `rows × 2` symbols.
    pub fn modulate_rows(&self, bits: &Matrix) -> Result<Matrix> {
        if bits.cols() != self.k_bits {
            return Err(Error::Config(format!(
                "expected {} bit columns, got {}",
                self.k_bits,
                bits.cols()
            )));
        }
        let mut out = Matrix::zeros(bits.rows(), 2);
        for (i, r) in bits.iter_rows().enumerate() {
            let b: Vec<u8> = r.iter().map(|v| (*v != 0.0) as u8).collect();
            let p = self.modulate(&b);
            out.row_mut(i).copy_from_slice(&[p.re, p.im]);
        }
        Ok(out)
    }
}

pub fn label_bits(label: usize, k_bits: usize) -> Vec<u8> {
    (0..k_bits)
        .map(|j| ((label >> (k_bits - 1 - j)) & 1) as u8)
        .collect()
}

pub fn bits_label(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, b| (acc << 1) | *b as usize)
}

pub fn qam_modulate(bits: &[u8], constellation: &QamConstellation) -> ComplexCoef {
    constellation.modulate(bits)
}

/// Relay gain giving unit average transmit power for unit-power inputs.
pub fn af_gain(h_a: ComplexCoef, h_b: ComplexCoef, sigma2_relay: f64) -> f64 {
    1.0 / (h_a.norm_sqr() + h_b.norm_sqr() + sigma2_relay).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terminal {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AfLink {
    pub beta: f64,
    pub sigma2_relay: f64,
    pub sigma2_terminal: f64,
    pub h_a: ComplexCoef,
    pub h_b: ComplexCoef,
}

impl AfLink {
    pub fn new(h_a: ComplexCoef, h_b: ComplexCoef, sigma2_relay: f64, sigma2_terminal: f64) -> Self {
        AfLink {
            beta: af_gain(h_a, h_b, sigma2_relay),
            sigma2_relay,
            sigma2_terminal,
            h_a,
            h_b,
        }
    }

    fn own_and_other(&self, at: Terminal) -> (ComplexCoef, ComplexCoef) {
        match at {
            Terminal::A => (self.h_a, self.h_b),
            Terminal::B => (self.h_b, self.h_a),
        }
    }

    /// Self-interference, end-to-end gain of the wanted symbol, and the total
    /// complex noise variance seen at terminal `at`.
    pub fn effective(&self, at: Terminal) -> (ComplexCoef, ComplexCoef, f64) {
        let (own, other) = self.own_and_other(at);
        let loop_gain = own.scale(self.beta) * own;
        let h_eff = own.scale(self.beta) * other;
        let s2 = own.norm_sqr() * self.beta * self.beta * self.sigma2_relay + self.sigma2_terminal;
        (loop_gain, h_eff, s2)
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Exact bitwise LLRs `ln P(b=0|y) − ln P(b=1|y)` for `y = h·x + n`, with
/// circular Gaussian noise of total variance `sigma2`, uniform priors.
pub fn bitwise_llr(
    y: ComplexCoef,
    h: ComplexCoef,
    sigma2: f64,
    constellation: &QamConstellation,
) -> Vec<f64> {
    let k = constellation.k_bits();
    let metrics: Vec<f64> = constellation
        .points()
        .iter()
        .map(|&x| {
            let hx = h * x;
            let d = ComplexCoef::new(y.re - hx.re, y.im - hx.im);
            -d.norm_sqr() / sigma2
        })
        .collect();
    (0..k)
        .map(|bit| {
            let shift = k - 1 - bit;
            let zero = log_sum_exp(
                metrics.iter().enumerate().filter(|(l, _)| (l >> shift) & 1 == 0).map(|(_, m)| *m),
            );
            let one = log_sum_exp(
                metrics.iter().enumerate().filter(|(l, _)| (l >> shift) & 1 == 1).map(|(_, m)| *m),
            );
            let llr = zero - one;
            if llr.is_nan() {
                0.0
            } else {
                llr.clamp(-LLR_CLAMP, LLR_CLAMP)
            }
        })
        .collect()
}

/// LLRs for the other terminal's bits at terminal `at`, after removing the
/// known own-symbol component.
pub fn af_bitwise_llr(
    y: ComplexCoef,
    own_symbol: ComplexCoef,
    link: &AfLink,
    at: Terminal,
    constellation: &QamConstellation,
) -> Vec<f64> {
    let (loop_gain, h_eff, s2) = link.effective(at);
    let si = loop_gain * own_symbol;
    let clean = ComplexCoef::new(y.re - si.re, y.im - si.im);
    bitwise_llr(clean, h_eff, s2, constellation)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AfRate {
    pub mean_loss: f64,
    pub sum_rate: f64,
}

/// Monte Carlo sum rate of amplify-and-forward relaying with optimal bitwise
/// demapping at both terminals. Fading channels are redrawn every `block`
/// symbols.
pub fn af_sum_rate(
    constellation: &QamConstellation,
    channel: ChannelKind,
    snr_db: f64,
    n_symbols: usize,
    block: usize,
    rng: &mut GaussianRng,
) -> Result<AfRate> {
    if n_symbols == 0 || block == 0 {
        return Err(Error::Config("af_sum_rate needs symbols and a block size".into()));
    }
    let k = constellation.k_bits();
    let noise = NoiseSpec::from_snr_db(snr_db)?;
    let s2 = noise.sigma2();
    let mut loss_sum = 0.0;
    let mut start = 0;
    while start < n_symbols {
        let n = block.min(n_symbols - start);
        let bits_a = random_bits(n, k, rng);
        let bits_b = random_bits(n, k, rng);
        let (h_a, h_b) = channel.draw(rng);
        let z_r = sample_awgn(noise, n, rng);
        let z_a = sample_awgn(noise, n, rng);
        let z_b = sample_awgn(noise, n, rng);

        let x_a = constellation.modulate_rows(&bits_a)?;
        let x_b = constellation.modulate_rows(&bits_b)?;
        let link = AfLink::new(h_a, h_b, s2, s2);
        let x_r = apply_ma(&x_a, &x_b, h_a, h_b, &z_r)?.map(|v| v * link.beta);
        let y_a = apply_bc(&x_r, h_a, &z_a)?;
        let y_b = apply_bc(&x_r, h_b, &z_b)?;

        let mut llr_at_a = Matrix::zeros(n, k);
        let mut llr_at_b = Matrix::zeros(n, k);
        for i in 0..n {
            let c = |m: &Matrix| ComplexCoef::new(m.get(i, 0), m.get(i, 1));
            let la = af_bitwise_llr(c(&y_a), c(&x_a), &link, Terminal::A, constellation);
            let lb = af_bitwise_llr(c(&y_b), c(&x_b), &link, Terminal::B, constellation);
            llr_at_a.row_mut(i).copy_from_slice(&la);
            llr_at_b.row_mut(i).copy_from_slice(&lb);
        }
        loss_sum += bce_loss(&llr_at_a, &bits_b)? * (n * k) as f64;
        loss_sum += bce_loss(&llr_at_b, &bits_a)? * (n * k) as f64;
        start += n;
    }
    let mean_loss = loss_sum / (2 * n_symbols * k) as f64;
    let sum_rate = sum_rate_from_loss(k, mean_loss);
    Ok(AfRate { mean_loss, sum_rate })
}

/// BPSK denoising map at the relay: equal symbols (|y| near 2) → +1,
/// opposite symbols (y near 0) → −1.
pub fn dnf_bpsk_map(y_r: f64) -> f64 {
    if y_r.abs() > 1.0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn qpsk_points() {
        let c = QamConstellation::new(2).unwrap();
        let p = c.modulate(&[0, 0]);
        assert!((p.re - FRAC_1_SQRT_2).abs() < 1e-15 && (p.im - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((c.mean_energy() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qam16_energy_and_levels() {
        let c = QamConstellation::new(4).unwrap();
        assert!((c.mean_energy() - 1.0).abs() < 1e-14);
        let s = 10f64.sqrt();
        let mut levels: Vec<i64> = c.points().iter().map(|p| (p.re * s).round() as i64).collect();
        levels.sort();
        levels.dedup();
        assert_eq!(levels, vec![-3, -1, 1, 3]);
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for k in [2, 4] {
            let c = QamConstellation::new(k).unwrap();
            let pts = c.points();
            let min_d = pts
                .iter()
                .enumerate()
                .flat_map(|(i, a)| pts[i + 1..].iter().map(move |b| (a.re - b.re).hypot(a.im - b.im)))
                .fold(f64::INFINITY, f64::min);
            for (i, a) in pts.iter().enumerate() {
                for (j, b) in pts.iter().enumerate().skip(i + 1) {
                    if ((a.re - b.re).hypot(a.im - b.im) - min_d).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "k={k} labels {i} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn af_gain_values() {
        let one = ComplexCoef::ONE;
        assert!((af_gain(one, one, 1.0) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((af_gain(one, one, 1e-15) - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn noise_free_llr_saturates() {
        let c = QamConstellation::new(2).unwrap();
        let link = AfLink::new(ComplexCoef::ONE, ComplexCoef::ONE, 1e-12, 1e-12);
        let x_a = c.modulate(&[1, 0]);
        let x_b = c.modulate(&[0, 1]);
        let y = ComplexCoef::new((x_a.re + x_b.re) * link.beta, (x_a.im + x_b.im) * link.beta);
        let llr = af_bitwise_llr(y, x_b, &link, Terminal::B, &c);
        assert_eq!(llr, vec![-LLR_CLAMP, LLR_CLAMP]);
    }

    #[test]
    fn llr_sign_symmetry() {
        let c = QamConstellation::new(4).unwrap();
        let neg = QamConstellation {
            k_bits: 4,
            points: c.points().iter().map(|p| p.scale(-1.0)).collect(),
        };
        let h = ComplexCoef::new(0.4, 0.9);
        let y = ComplexCoef::new(0.3, -0.7);
        let a = bitwise_llr(y, h, 0.4, &c);
        let b = bitwise_llr(y.scale(-1.0), h, 0.4, &neg);
        for (x, z) in a.iter().zip(&b) {
            assert!((x - z).abs() < 1e-12);
        }
    }

    #[test]
    fn dnf_map_values() {
        assert_eq!(dnf_bpsk_map(2.0), 1.0);
        assert_eq!(dnf_bpsk_map(0.0), -1.0);
        assert_eq!(dnf_bpsk_map(-2.0), 1.0);
    }

    #[test]
    fn af_rate_bounds() {
        let c = QamConstellation::new(2).unwrap();
        let mut rng = GaussianRng::seed_from_u64(2);
        for snr in [-10.0, 0.0, 20.0] {
            let r = af_sum_rate(&c, ChannelKind::BlockRayleigh, snr, 2000, 128, &mut rng).unwrap();
            assert!((0.0..=4.0).contains(&r.sum_rate));
        }
    }
}
