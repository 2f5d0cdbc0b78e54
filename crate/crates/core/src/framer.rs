//! Dual-polarization frame construction: subcarrier mapping, OFDM
//! modulation with cyclic prefix, the Alamouti training block and the
//! 16-QAM payload.

use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{self, ComplexVector, PnSequence, RngStream};
use crate::error::{Error, Result};
use crate::seqgen::{verify_complementary, GolayPair};

/// OFDM dimensioning shared by the transmitter and the estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    /// FFT size `N`.
    pub fft_size: usize,
    /// Cyclic prefix length `N_cp` in samples.
    pub cp_len: usize,
    /// Number of modulated subcarriers `L`.
    pub data_subcarriers: usize,
    /// Unmodulated bins on each side of DC (the DC bin itself is extra).
    pub dc_guard: usize,
    /// Sample rate in samples per second.
    pub sample_rate: f64,
    pub n_data_symbols: usize,
    pub pn_seed: u32,
    /// Weight the first training symbol with the PN sequence.
    pub use_pn: bool,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            fft_size: 512,
            cp_len: 46,
            data_subcarriers: 416,
            dc_guard: 5,
            sample_rate: 40e9,
            n_data_symbols: 10,
            pn_seed: 0xACE1,
            use_pn: true,
        }
    }
}

impl FrameConfig {
    /// `N_s = N + N_cp`.
    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    /// `N_r = N_s + N_cp`.
    pub fn pair_offset(&self) -> usize {
        self.symbol_len() + self.cp_len
    }

    /// Subcarrier spacing `F_s / N` in Hz.
    pub fn delta_f(&self) -> f64 {
        self.sample_rate / self.fft_size as f64
    }

    pub fn frame_len(&self) -> usize {
        (self.n_data_symbols + 2) * self.symbol_len()
    }

    /// Number of unmodulated edge bins.
    pub fn edge_bins(&self) -> usize {
        self.fft_size - self.data_subcarriers - 2 * self.dc_guard - 1
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.fft_size;
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!("fft_size {n} must be a power of two >= 4")));
        }
        if self.cp_len >= n {
            return Err(Error::Config("cp_len must be shorter than fft_size".into()));
        }
        if self.data_subcarriers == 0 || self.data_subcarriers % 2 != 0 {
            return Err(Error::Config("data_subcarriers must be even and positive".into()));
        }
        if self.data_subcarriers + 2 * self.dc_guard + 1 > n {
            return Err(Error::Config("subcarrier layout does not fit in the FFT".into()));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        if self.use_pn {
            dsp::pn_generate(self.pn_seed, 1)?;
        }
        Ok(())
    }

    /// FFT-order bin indices carrying data, in ascending frequency.
    ///
    /// The occupied band is contiguous on each side of DC, leaving DC,
    /// `dc_guard` bins per side of it and the spectrum edges empty. For the
    /// default dimensioning that is 1 + 10 + 85 empty bins, with 43 empty
    /// edge bins at the low end and 42 at the high end.
    pub fn data_bins(&self) -> Vec<usize> {
        let n = self.fft_size as i64;
        let half = (self.data_subcarriers / 2) as i64;
        let g = self.dc_guard as i64;
        let neg = (-(g + half))..=-(g + 1);
        let pos = (g + 1)..=(g + half);
        neg.chain(pos).map(|k| k.rem_euclid(n) as usize).collect()
    }

    pub fn pn(&self) -> Result<PnSequence> {
        if self.use_pn {
            dsp::pn_generate(self.pn_seed, self.symbol_len())
        } else {
            Ok(PnSequence::ones(self.symbol_len()))
        }
    }
}

/// Paired sample streams for the X and Y polarizations.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPolSignal {
    pub x: ComplexVector,
    pub y: ComplexVector,
    pub sample_rate: f64,
    /// Index of the first training sample, when known.
    pub true_frame_start: Option<usize>,
}

impl DualPolSignal {
    pub fn new(x: ComplexVector, y: ComplexVector, sample_rate: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "polarization lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        Ok(Self {
            x,
            y,
            sample_rate,
            true_frame_start: None,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Total energy over both polarizations.
    pub fn energy(&self) -> f64 {
        dsp::energy(&self.x) + dsp::energy(&self.y)
    }

    /// Applies `f` to every `(x, y)` sample pair.
    pub fn map_pairs(&mut self, mut f: impl FnMut(usize, Complex64, Complex64) -> (Complex64, Complex64)) {
        for (k, (x, y)) in self.x.iter_mut().zip(self.y.iter_mut()).enumerate() {
            let (nx, ny) = f(k, *x, *y);
            *x = nx;
            *y = ny;
        }
    }
}

/// Sample ranges of the frame sections, relative to the frame start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLabel {
    pub ts_symbol_1: Range<usize>,
    pub ts_symbol_2: Range<usize>,
    pub data: Range<usize>,
}

impl FrameLabel {
    fn new(cfg: &FrameConfig, n_data_symbols: usize) -> Self {
        let ns = cfg.symbol_len();
        Self {
            ts_symbol_1: 0..ns,
            ts_symbol_2: ns..2 * ns,
            data: 2 * ns..(2 + n_data_symbols) * ns,
        }
    }
}

/// Places `payload` on the data bins of an otherwise empty spectrum.
pub fn subcarrier_map(payload: &[Complex64], cfg: &FrameConfig) -> Result<ComplexVector> {
    if payload.len() != cfg.data_subcarriers {
        return Err(Error::InvalidInput(format!(
            "payload has {} values, layout needs {}",
            payload.len(),
            cfg.data_subcarriers
        )));
    }
    let mut spectrum = vec![Complex64::new(0.0, 0.0); cfg.fft_size];
    for (&bin, &v) in cfg.data_bins().iter().zip(payload) {
        spectrum[bin] = v;
    }
    Ok(spectrum)
}

/// Reads the data bins back out of a spectrum.
pub fn subcarrier_demap(spectrum: &[Complex64], cfg: &FrameConfig) -> Result<ComplexVector> {
    if spectrum.len() != cfg.fft_size {
        return Err(Error::InvalidInput(format!(
            "spectrum has {} bins, expected {}",
            spectrum.len(),
            cfg.fft_size
        )));
    }
    Ok(cfg.data_bins().iter().map(|&b| spectrum[b]).collect())
}

/// IFFT of `spectrum` with the last `N_cp` samples prepended.
pub fn ofdm_modulate(spectrum: &[Complex64], cfg: &FrameConfig) -> Result<ComplexVector> {
    if spectrum.len() != cfg.fft_size {
        return Err(Error::InvalidInput(format!(
            "spectrum has {} bins, expected {}",
            spectrum.len(),
            cfg.fft_size
        )));
    }
    let body = dsp::ifft(spectrum)?;
    let mut out = Vec::with_capacity(cfg.symbol_len());
    out.extend_from_slice(&body[cfg.fft_size - cfg.cp_len..]);
    out.extend_from_slice(&body);
    Ok(out)
}

/// Strips the cyclic prefix and returns the FFT of one received symbol.
pub fn ofdm_demodulate(symbol: &[Complex64], cfg: &FrameConfig) -> Result<ComplexVector> {
    if symbol.len() != cfg.symbol_len() {
        return Err(Error::InvalidInput(format!(
            "symbol has {} samples, expected {}",
            symbol.len(),
            cfg.symbol_len()
        )));
    }
    dsp::fft(&symbol[cfg.cp_len..])
}

/// Training symbols of the Alamouti arrangement
///
/// ```text
///            symbol 1      symbol 2
///   X-pol    p(n)·A        -B*
///   Y-pol    p(n)·B         A*
/// ```
///
/// where each entry is the CP-extended IFFT of the mapped sequence.
pub fn build_training_block(
    gcs: &GolayPair,
    cfg: &FrameConfig,
) -> Result<(DualPolSignal, FrameLabel)> {
    cfg.validate()?;
    if !verify_complementary(gcs).pass {
        return Err(Error::InvalidInput("training pair is not complementary".into()));
    }
    if gcs.len() != cfg.data_subcarriers {
        return Err(Error::InvalidInput(format!(
            "training pair length {} does not match {} data subcarriers",
            gcs.len(),
            cfg.data_subcarriers
        )));
    }
    let pn = cfg.pn()?;
    let sym = |seq: Vec<Complex64>| -> Result<ComplexVector> {
        ofdm_modulate(&subcarrier_map(&seq, cfg)?, cfg)
    };
    let weight = |mut s: ComplexVector| {
        s.iter_mut().zip(pn.values()).for_each(|(v, p)| *v *= p);
        s
    };
    let a = gcs.a().to_vec();
    let b = gcs.b().to_vec();
    let neg_b_conj: ComplexVector = b.iter().map(|v| -v.conj()).collect();
    let a_conj: ComplexVector = a.iter().map(|v| v.conj()).collect();

    let mut x = weight(sym(a)?);
    x.extend(sym(neg_b_conj)?);
    let mut y = weight(sym(b)?);
    y.extend(sym(a_conj)?);

    let mut sig = DualPolSignal::new(x, y, cfg.sample_rate)?;
    sig.true_frame_start = Some(0);
    Ok((sig, FrameLabel::new(cfg, 0)))
}

const QAM16_LEVELS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];

fn gray_level(b0: u8, b1: u8) -> f64 {
    // 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
    QAM16_LEVELS[usize::from(b0 << 1 | b1)]
}

fn level_bits(v: f64) -> (u8, u8) {
    if v < -2.0 {
        (0, 0)
    } else if v < 0.0 {
        (0, 1)
    } else if v < 2.0 {
        (1, 1)
    } else {
        (1, 0)
    }
}

/// Gray-mapped, unit-average-energy 16-QAM. Bits are taken four at a time:
/// the first two select the in-phase level, the last two the quadrature.
pub fn qam16_map(bits: &[u8]) -> Result<ComplexVector> {
    if bits.len() % 4 != 0 {
        return Err(Error::InvalidInput(format!(
            "16-QAM needs a multiple of 4 bits, got {}",
            bits.len()
        )));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::InvalidInput("bits must be 0 or 1".into()));
    }
    let s = 1.0 / 10f64.sqrt();
    Ok(bits
        .chunks_exact(4)
        .map(|c| Complex64::new(gray_level(c[0], c[1]) * s, gray_level(c[2], c[3]) * s))
        .collect())
}

/// Hard-decision inverse of [`qam16_map`].
pub fn qam16_demap(symbols: &[Complex64]) -> Vec<u8> {
    let s = 10f64.sqrt();
    symbols
        .iter()
        .flat_map(|z| {
            let (i0, i1) = level_bits(z.re * s);
            let (q0, q1) = level_bits(z.im * s);
            [i0, i1, q0, q1]
        })
        .collect()
}

/// Bits needed to fill the payload of both polarizations.
pub fn payload_bits(cfg: &FrameConfig) -> usize {
    2 * cfg.n_data_symbols * cfg.data_subcarriers * 4
}

/// Training block followed by `n_data_symbols` 16-QAM symbols per
/// polarization. The first half of `bits` feeds X, the second half Y.
pub fn build_frame(
    bits: &[u8],
    gcs: &GolayPair,
    cfg: &FrameConfig,
) -> Result<(DualPolSignal, FrameLabel)> {
    let needed = payload_bits(cfg);
    if bits.len() < needed {
        return Err(Error::InvalidInput(format!(
            "payload needs {needed} bits, got {}",
            bits.len()
        )));
    }
    let (mut sig, _) = build_training_block(gcs, cfg)?;
    let per_symbol = cfg.data_subcarriers * 4;
    let per_pol = needed / 2;
    for (pol, chunk) in [&bits[..per_pol], &bits[per_pol..needed]].into_iter().enumerate() {
        for sym_bits in chunk.chunks_exact(per_symbol) {
            let spectrum = subcarrier_map(&qam16_map(sym_bits)?, cfg)?;
            let samples = ofdm_modulate(&spectrum, cfg)?;
            if pol == 0 {
                sig.x.extend(samples);
            } else {
                sig.y.extend(samples);
            }
        }
    }
    Ok((sig, FrameLabel::new(cfg, cfg.n_data_symbols)))
}

/// [`build_frame`] with a random payload drawn from `rng`.
pub fn random_frame(
    gcs: &GolayPair,
    cfg: &FrameConfig,
    rng: &mut RngStream,
) -> Result<(DualPolSignal, FrameLabel)> {
    let bits: Vec<u8> = (0..payload_bits(cfg)).map(|_| rng.rng().gen_range(0..=1)).collect();
    build_frame(&bits, gcs, cfg)
}
