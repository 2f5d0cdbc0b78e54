//! Numeric substrate: DFTs, the PN weighting sequence and labelled random
//! streams shared by every other module.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type ComplexVector = Vec<Complex64>;

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

fn check_pow2(len: usize) -> Result<()> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::Config(format!(
            "transform length {len} is not a power of two"
        )));
    }
    Ok(())
}

/// Forward DFT without scaling: `X(v) = sum_n x(n) exp(-i 2 pi v n / N)`.
pub fn fft(x: &[Complex64]) -> Result<ComplexVector> {
    check_pow2(x.len())?;
    Ok(dft_any(x))
}

/// Inverse DFT with `1/N` scaling, the exact inverse of [`fft`].
pub fn ifft(x: &[Complex64]) -> Result<ComplexVector> {
    check_pow2(x.len())?;
    Ok(idft_any(x))
}

/// Unscaled forward DFT of arbitrary length. Used by the channel operators,
/// which filter whole received buffers.
pub fn dft_any(x: &[Complex64]) -> ComplexVector {
    let mut buf = x.to_vec();
    if !buf.is_empty() {
        plan(buf.len(), false).process(&mut buf);
    }
    buf
}

/// Inverse DFT of arbitrary length with `1/N` scaling.
pub fn idft_any(x: &[Complex64]) -> ComplexVector {
    let mut buf = x.to_vec();
    if buf.is_empty() {
        return buf;
    }
    plan(buf.len(), true).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Frequency in Hz of DFT bin `k` for a transform of length `len`, mapped
/// into `[-fs/2, fs/2)`.
pub fn bin_frequency(k: usize, len: usize, fs: f64) -> f64 {
    let k = k as i64;
    let n = len as i64;
    let signed = if 2 * k >= n { k - n } else { k };
    signed as f64 * fs / len as f64
}

/// Bipolar pseudo-random weighting sequence `p(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PnSequence {
    values: Vec<f64>,
    seed: u32,
}

/// Feedback taps of the x^16 + x^14 + x^13 + x^11 + 1 Fibonacci register,
/// expressed as bit positions of a right-shifting 16-bit state.
const PN_TAPS: [u32; 4] = [0, 2, 3, 5];

impl PnSequence {
    /// Runs the 16-bit maximal-length register from `seed` and maps each
    /// output bit `b` to `1 - 2b`.
    pub fn generate(seed: u32, length: usize) -> Result<Self> {
        if seed == 0 || seed > u32::from(u16::MAX) {
            return Err(Error::Config(format!(
                "PN seed must be a nonzero 16-bit register state, got {seed}"
            )));
        }
        if length == 0 {
            return Err(Error::Config("PN length must be at least 1".into()));
        }
        let mut state = seed as u16;
        let values = (0..length)
            .map(|_| {
                let out = state & 1;
                let fb = PN_TAPS
                    .iter()
                    .fold(0u16, |acc, &t| acc ^ ((state >> t) & 1));
                state = (state >> 1) | (fb << 15);
                if out == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        Ok(Self { values, seed })
    }

    /// An all-ones sequence, i.e. weighting disabled.
    pub fn ones(length: usize) -> Self {
        Self {
            values: vec![1.0; length],
            seed: 0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Convenience wrapper around [`PnSequence::generate`].
pub fn pn_generate(seed: u32, length: usize) -> Result<PnSequence> {
    PnSequence::generate(seed, length)
}

/// A reproducible random stream identified by `(seed, label)`.
///
/// The label is hashed together with the seed into a ChaCha8 key, so two
/// streams with different labels are independent while the same pair always
/// yields the same values, whatever the order in which streams are created.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    label: String,
    rng: ChaCha8Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

impl RngStream {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        let label = label.into();
        let mut state = seed ^ fnv1a(label.as_bytes()).rotate_left(17);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self {
            seed,
            label,
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Derives an independent stream whose label extends this one.
    pub fn child(&self, suffix: &str) -> Self {
        Self::new(self.seed, format!("{}/{}", self.label, suffix))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// `n` circularly-symmetric complex Gaussian samples with total variance
/// `sigma^2` (half in each quadrature).
pub fn complex_gaussian(rng: &mut RngStream, n: usize, sigma: f64) -> ComplexVector {
    let q = sigma / std::f64::consts::SQRT_2;
    (0..n)
        .map(|_| {
            let re = rng.standard_normal();
            let im = rng.standard_normal();
            Complex64::new(q * re, q * im)
        })
        .collect()
}

/// Sum of `|x|^2`.
pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}
