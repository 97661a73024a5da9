//! Complex channel arithmetic on 2-D real symbols, noise and fading sampling.
//!
//! Symbols are `count × 2` matrices holding (in-phase, quadrature) per row.
//! A complex gain `h` acts row-wise as complex multiplication. Its adjoint,
//! used to carry gradients back through a channel hop, is multiplication by
//! `conj(h)`.
//!
//! Gaussian deviates come from the Marsaglia polar transform applied to pairs
//! of uniforms on (-1, 1) drawn from a ChaCha8 stream: draw `u, v` until
//! `0 < s = u² + v² < 1`, then emit `u·√(−2 ln s / s)` followed by
//! `v·√(−2 ln s / s)`. Uniforms are `next_u64() >> 11` scaled by `2⁻⁵³`.
//! Fixing the seed fixes every stream in this crate.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::Matrix;

/// |h|² below this is treated as a channel that cannot be inverted.
pub const DEGENERATE_GAIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexCoef {
    pub re: f64,
    pub im: f64,
}

impl ComplexCoef {
    pub const ONE: ComplexCoef = ComplexCoef { re: 1.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        ComplexCoef { re, im }
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn conj(self) -> Self {
        ComplexCoef::new(self.re, -self.im)
    }

    pub fn scale(self, s: f64) -> Self {
        ComplexCoef::new(self.re * s, self.im * s)
    }

    pub fn inv(self) -> Result<Self> {
        let n = self.norm_sqr();
        if n.is_nan() || n < DEGENERATE_GAIN {
            return Err(Error::DegenerateChannel(n));
        }
        Ok(ComplexCoef::new(self.re / n, -self.im / n))
    }

    /// `self · (x₁ + j x₂)` as a real pair.
    pub fn apply(self, x: [f64; 2]) -> [f64; 2] {
        [
            self.re * x[0] - self.im * x[1],
            self.re * x[1] + self.im * x[0],
        ]
    }
}

impl std::ops::Mul for ComplexCoef {
    type Output = ComplexCoef;

    fn mul(self, o: ComplexCoef) -> ComplexCoef {
        ComplexCoef::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

/// Complex noise of total variance `sigma2`, split evenly over I and Q.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    sigma2: f64,
}

impl NoiseSpec {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!("noise variance must be positive, got {sigma2}")));
        }
        Ok(NoiseSpec { sigma2 })
    }

    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        NoiseSpec::new(snr_db_to_sigma2(snr_db, 1.0, 1.0))
    }

    pub fn sigma2(self) -> f64 {
        self.sigma2
    }

    pub fn per_dim_std(self) -> f64 {
        (self.sigma2 / 2.0).sqrt()
    }
}

/// `sigma2 = avg_channel_power · signal_power / 10^(snr_db/10)`, the inverse
/// of SNR = E[|H_A|² + |H_B|²] / 2σ² with unit-power symbols.
pub fn snr_db_to_sigma2(snr_db: f64, avg_channel_power: f64, signal_power: f64) -> f64 {
    avg_channel_power * signal_power / 10f64.powf(snr_db / 10.0)
}

/// Seedable uniform/Gaussian source. See the module docs for the transform.
#[derive(Clone, Debug)]
pub struct GaussianRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        GaussianRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Independent stream `index` under `seed`.
    pub fn stream(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(index);
        GaussianRng { inner, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bit(&mut self) -> f64 {
        (self.inner.next_u64() >> 63) as f64
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

/// `count × 2` i.i.d. Gaussian entries with variance `sigma2 / 2` each.
pub fn sample_awgn(spec: NoiseSpec, count: usize, rng: &mut GaussianRng) -> Matrix {
    let sd = spec.per_dim_std();
    let data = (0..2 * count).map(|_| sd * rng.standard_normal()).collect();
    Matrix::from_vec(count, 2, data).expect("count >= 1")
}

/// Unit-mean-power circular Gaussian coefficient.
pub fn sample_rayleigh(rng: &mut GaussianRng) -> ComplexCoef {
    let sd = std::f64::consts::FRAC_1_SQRT_2;
    let re = sd * rng.standard_normal();
    let im = sd * rng.standard_normal();
    ComplexCoef::new(re, im)
}

/// Independent (H_A, H_B), each with E|H|² = 1.
pub fn sample_rayleigh_pair(rng: &mut GaussianRng) -> (ComplexCoef, ComplexCoef) {
    let a = sample_rayleigh(rng);
    let b = sample_rayleigh(rng);
    (a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// H_A = H_B = 1.
    Awgn,
    /// One Rayleigh pair per block, fresh across blocks.
    BlockRayleigh,
}

impl ChannelKind {
    /// Channel pair for one block. Degenerate fading draws are redrawn so
    /// that channel inverses stay finite.
    pub fn draw(self, rng: &mut GaussianRng) -> (ComplexCoef, ComplexCoef) {
        match self {
            ChannelKind::Awgn => (ComplexCoef::ONE, ComplexCoef::ONE),
            ChannelKind::BlockRayleigh => loop {
                let (a, b) = sample_rayleigh_pair(rng);
                if a.norm_sqr() >= DEGENERATE_GAIN && b.norm_sqr() >= DEGENERATE_GAIN {
                    break (a, b);
                }
            },
        }
    }
}

fn check_symbols(x: &Matrix) -> Result<()> {
    if x.cols() != 2 {
        return Err(Error::Config(format!("symbols need 2 columns, got {}", x.cols())));
    }
    Ok(())
}

/// Row-wise complex product `h · x`.
pub fn complex_mul(h: ComplexCoef, x: &Matrix) -> Matrix {
    assert_eq!(x.cols(), 2, "complex_mul expects I/Q pairs");
    let mut out = Matrix::zeros(x.rows(), 2);
    for i in 0..x.rows() {
        let r = x.row(i);
        out.row_mut(i).copy_from_slice(&h.apply([r[0], r[1]]));
    }
    out
}

/// Gradient transport through `y = h · x`: returns `conj(h) · g`.
pub fn complex_mul_adjoint(h: ComplexCoef, grad: &Matrix) -> Matrix {
    complex_mul(h.conj(), grad)
}

/// Multiple-access hop: `Y_R = H_A X_A + H_B X_B + Z_R`.
pub fn apply_ma(
    x_a: &Matrix,
    x_b: &Matrix,
    h_a: ComplexCoef,
    h_b: ComplexCoef,
    z_r: &Matrix,
) -> Result<Matrix> {
    check_symbols(x_a)?;
    if x_a.shape() != x_b.shape() || x_a.shape() != z_r.shape() {
        return Err(Error::Config(format!(
            "MA shapes differ: {:?}, {:?}, {:?}",
            x_a.shape(),
            x_b.shape(),
            z_r.shape()
        )));
    }
    let mut y = complex_mul(h_a, x_a);
    y.add_assign(&complex_mul(h_b, x_b));
    y.add_assign(z_r);
    Ok(y)
}

/// Broadcast hop to one terminal: `Y = H X_R + Z`.
pub fn apply_bc(x_r: &Matrix, h: ComplexCoef, z: &Matrix) -> Result<Matrix> {
    check_symbols(x_r)?;
    if x_r.shape() != z.shape() {
        return Err(Error::Config(format!(
            "BC shapes differ: {:?}, {:?}",
            x_r.shape(),
            z.shape()
        )));
    }
    let mut y = complex_mul(h, x_r);
    y.add_assign(z);
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(a: f64, b: f64) -> Matrix {
        Matrix::from_rows(&[[a, b]]).unwrap()
    }

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_db_to_sigma2(0.0, 1.0, 1.0), 1.0);
        assert!((snr_db_to_sigma2(10.0, 1.0, 1.0) - 0.1).abs() < 1e-15);
        assert!((snr_db_to_sigma2(-5.0, 1.0, 1.0) - 3.1622776601683795).abs() < 1e-12);
    }

    #[test]
    fn complex_products() {
        assert_eq!(complex_mul(ComplexCoef::ONE, &row(0.3, -2.0)).row(0), &[0.3, -2.0]);
        assert_eq!(complex_mul(ComplexCoef::new(0.0, 1.0), &row(1.0, 0.0)).row(0), &[0.0, 1.0]);
        assert_eq!(complex_mul(ComplexCoef::new(2.0, -1.0), &row(1.0, 1.0)).row(0), &[3.0, 1.0]);
    }

    #[test]
    fn ma_reproduces_bpsk_superpositions() {
        let z = Matrix::zeros(1, 2);
        let one = ComplexCoef::ONE;
        let y = apply_ma(&row(1.0, 0.0), &row(-1.0, 0.0), one, one, &z).unwrap();
        assert_eq!(y.row(0), &[0.0, 0.0]);
        let y = apply_ma(&row(1.0, 0.0), &row(1.0, 0.0), one, one, &z).unwrap();
        assert_eq!(y.row(0), &[2.0, 0.0]);
        let z0 = row(0.25, -0.5);
        let y = apply_ma(&Matrix::zeros(1, 2), &Matrix::zeros(1, 2), one, one, &z0).unwrap();
        assert_eq!(y, z0);
    }

    #[test]
    fn ma_shape_mismatch() {
        let z = Matrix::zeros(2, 2);
        let r = apply_ma(&row(1.0, 0.0), &row(1.0, 0.0), ComplexCoef::ONE, ComplexCoef::ONE, &z);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn bc_cases() {
        let z = Matrix::zeros(1, 2);
        let x = row(0.7, -0.1);
        assert_eq!(apply_bc(&x, ComplexCoef::ONE, &z).unwrap(), x);
        let z1 = row(0.2, 0.3);
        assert_eq!(apply_bc(&Matrix::zeros(1, 2), ComplexCoef::new(0.4, 2.0), &z1).unwrap(), z1);
        assert_eq!(apply_bc(&row(1.0, 0.0), ComplexCoef::new(0.0, 1.0), &z).unwrap().row(0), &[0.0, 1.0]);
    }

    #[test]
    fn inverse_and_degenerate() {
        let h = ComplexCoef::new(0.6, -0.8);
        let p = h * h.inv().unwrap();
        assert!((p.re - 1.0).abs() < 1e-15 && p.im.abs() < 1e-15);
        assert!(matches!(ComplexCoef::new(1e-7, 0.0).inv(), Err(Error::DegenerateChannel(_))));
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        // L = Σ w ⊙ (h·x): dL/dx = conj(h)·w
        let h = ComplexCoef::new(0.3, -1.7);
        let x = Matrix::from_rows(&[[0.5, 1.0], [-0.2, 0.4]]).unwrap();
        let w = Matrix::from_rows(&[[1.0, -2.0], [0.3, 0.9]]).unwrap();
        let loss = |x: &Matrix| -> f64 {
            complex_mul(h, x).data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
        };
        let g = complex_mul_adjoint(h, &w);
        let step = 1e-6;
        for i in 0..4 {
            let mut p = x.clone();
            p.data_mut()[i] += step;
            let mut m = x.clone();
            m.data_mut()[i] -= step;
            let fd = (loss(&p) - loss(&m)) / (2.0 * step);
            assert!((fd - g.data()[i]).abs() <= 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn noise_is_reproducible() {
        let spec = NoiseSpec::new(0.5).unwrap();
        let a = sample_awgn(spec, 100, &mut GaussianRng::seed_from_u64(9));
        let b = sample_awgn(spec, 100, &mut GaussianRng::seed_from_u64(9));
        assert_eq!(a, b);
        let p1 = sample_rayleigh_pair(&mut GaussianRng::seed_from_u64(4));
        let p2 = sample_rayleigh_pair(&mut GaussianRng::seed_from_u64(4));
        assert_eq!(p1, p2);
    }

    #[test]
    fn streams_differ() {
        let a = GaussianRng::stream(1, 0).next_u64();
        let b = GaussianRng::stream(1, 1).next_u64();
        assert_ne!(a, b);
    }

    #[test]
    fn noise_spec_rejects_nonpositive() {
        assert!(NoiseSpec::new(0.0).is_err());
        assert!(NoiseSpec::new(-1.0).is_err());
        assert!(NoiseSpec::new(f64::NAN).is_err());
    }
}
