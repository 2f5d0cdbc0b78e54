//! Linear impairments of a coherent dual-polarization link.
//!
//! [`run_channel`] applies them in a fixed order: timing pad, residual
//! chromatic dispersion, differential group delay, polarization-dependent
//! loss, carrier frequency offset, laser phase noise and finally ASE noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{self, complex_gaussian, RngStream};
use crate::error::{Error, Result};
use crate::framer::DualPolSignal;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Impairments for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelProfile {
    pub cfo_hz: f64,
    /// `None` means noiseless.
    pub osnr_db: Option<f64>,
    pub dgd_ps: f64,
    /// Angle between the launched polarizations and the principal states.
    pub pmd_launch_deg: f64,
    pub pdl_db: f64,
    pub pdl_axis_deg: f64,
    pub residual_cd_ps_per_nm: f64,
    /// Combined transmitter and local-oscillator linewidth; `None` disables
    /// phase noise.
    pub linewidth_hz: Option<f64>,
    /// Inclusive range the leading pad length is drawn from.
    pub timing_pad: [usize; 2],
    pub center_wavelength_nm: f64,
}

impl Default for ChannelProfile {
    fn default() -> Self {
        Self::neutral()
    }
}

impl ChannelProfile {
    /// No impairment at all and a fixed 1000-sample pad.
    pub fn neutral() -> Self {
        Self {
            cfo_hz: 0.0,
            osnr_db: None,
            dgd_ps: 0.0,
            pmd_launch_deg: 45.0,
            pdl_db: 0.0,
            pdl_axis_deg: 0.0,
            residual_cd_ps_per_nm: 0.0,
            linewidth_hz: None,
            timing_pad: [1000, 1000],
            center_wavelength_nm: 1550.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.cfo_hz,
            self.dgd_ps,
            self.pmd_launch_deg,
            self.pdl_db,
            self.pdl_axis_deg,
            self.residual_cd_ps_per_nm,
            self.center_wavelength_nm,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("channel parameters must be finite".into()));
        }
        if self.dgd_ps < 0.0 {
            return Err(Error::Config("dgd_ps must be >= 0".into()));
        }
        if self.pdl_db < 0.0 {
            return Err(Error::Config("pdl_db must be >= 0".into()));
        }
        if let Some(lw) = self.linewidth_hz {
            if !(lw.is_finite() && lw >= 0.0) {
                return Err(Error::Config("linewidth_hz must be >= 0".into()));
            }
        }
        if let Some(o) = self.osnr_db {
            if o.is_nan() {
                return Err(Error::Config("osnr_db must be a number".into()));
            }
        }
        if self.timing_pad[0] > self.timing_pad[1] {
            return Err(Error::Config("timing_pad range is inverted".into()));
        }
        if self.center_wavelength_nm <= 0.0 {
            return Err(Error::Config("center_wavelength_nm must be positive".into()));
        }
        Ok(())
    }

    /// Per-polarization arrival offsets (in samples, X then Y) introduced by
    /// the DGD element relative to the undistorted frame.
    pub fn dgd_offsets(&self, sample_rate: f64) -> (f64, f64) {
        let half = 0.5 * self.dgd_ps * 1e-12 * sample_rate;
        (half, -half)
    }
}

/// Reference bandwidth the OSNR is quoted in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OsnrModel {
    pub reference_bandwidth_hz: f64,
}

impl Default for OsnrModel {
    fn default() -> Self {
        // 0.1 nm at 1550 nm
        Self {
            reference_bandwidth_hz: 12.5e9,
        }
    }
}

/// Prepends `pad` zero samples to both polarizations.
pub fn apply_timing_pad(sig: &DualPolSignal, pad: usize) -> DualPolSignal {
    let zeros = vec![Complex64::new(0.0, 0.0); pad];
    let mut x = zeros.clone();
    x.extend_from_slice(&sig.x);
    let mut y = zeros;
    y.extend_from_slice(&sig.y);
    DualPolSignal {
        x,
        y,
        sample_rate: sig.sample_rate,
        true_frame_start: sig.true_frame_start.map(|s| s + pad),
    }
}

/// Draws a pad length uniformly from the inclusive `range`.
pub fn draw_pad(range: [usize; 2], rng: &mut RngStream) -> usize {
    rng.rng().gen_range(range[0]..=range[1])
}

fn rotate_phase(sig: &mut DualPolSignal, step: f64) {
    sig.map_pairs(|k, x, y| {
        let w = Complex64::from_polar(1.0, step * k as f64);
        (x * w, y * w)
    });
}

/// Multiplies both polarizations by `exp(i 2 pi nu k / F_s)`.
pub fn apply_cfo(sig: &DualPolSignal, nu_hz: f64, fs: f64) -> Result<DualPolSignal> {
    if !nu_hz.is_finite() || nu_hz.abs() > fs / 2.0 {
        return Err(Error::Config(format!(
            "CFO {nu_hz} Hz exceeds the unambiguous range +/-{} Hz",
            fs / 2.0
        )));
    }
    let mut out = sig.clone();
    if nu_hz != 0.0 {
        rotate_phase(&mut out, 2.0 * PI * nu_hz / fs);
    }
    Ok(out)
}

/// Common Wiener phase walk with per-sample increment variance
/// `2 pi linewidth / F_s`.
pub fn apply_phase_noise(
    sig: &DualPolSignal,
    linewidth_hz: f64,
    fs: f64,
    rng: &mut RngStream,
) -> Result<DualPolSignal> {
    if !(linewidth_hz.is_finite() && linewidth_hz >= 0.0) {
        return Err(Error::Config("linewidth must be >= 0".into()));
    }
    let mut out = sig.clone();
    if linewidth_hz == 0.0 {
        return Ok(out);
    }
    let sd = (2.0 * PI * linewidth_hz / fs).sqrt();
    let mut phase = 0.0;
    out.map_pairs(|_, x, y| {
        let w = Complex64::from_polar(1.0, phase);
        phase += sd * rng.standard_normal();
        (x * w, y * w)
    });
    Ok(out)
}

/// Multiplies the full-length spectrum of each polarization by `h(f)`.
fn filter_each(sig: &DualPolSignal, fs: f64, h: impl Fn(f64) -> (Complex64, Complex64)) -> DualPolSignal {
    let n = sig.len();
    let mut fx = dsp::dft_any(&sig.x);
    let mut fy = dsp::dft_any(&sig.y);
    for k in 0..n {
        let (hx, hy) = h(dsp::bin_frequency(k, n, fs));
        fx[k] *= hx;
        fy[k] *= hy;
    }
    DualPolSignal {
        x: dsp::idft_any(&fx),
        y: dsp::idft_any(&fy),
        sample_rate: sig.sample_rate,
        true_frame_start: sig.true_frame_start,
    }
}

fn rotate(sig: &mut DualPolSignal, theta: f64) {
    let (s, c) = theta.sin_cos();
    sig.map_pairs(|_, x, y| (x * c + y * s, y * c - x * s));
}

/// First-order PMD element.
///
/// The launched polarizations are rotated by `launch_deg` onto the principal
/// states; the first is delayed and the second advanced by half the DGD.
/// The output stays in the principal-state basis, which is also the
/// receiver's basis.
pub fn apply_dgd(sig: &DualPolSignal, dgd_ps: f64, launch_deg: f64, fs: f64) -> Result<DualPolSignal> {
    if !(dgd_ps.is_finite() && dgd_ps >= 0.0) {
        return Err(Error::Config("DGD must be >= 0".into()));
    }
    let mut out = sig.clone();
    rotate(&mut out, launch_deg.to_radians());
    if dgd_ps == 0.0 {
        return Ok(out);
    }
    let tau = dgd_ps * 1e-12;
    Ok(filter_each(&out, fs, |f| {
        (
            Complex64::from_polar(1.0, -PI * f * tau),
            Complex64::from_polar(1.0, PI * f * tau),
        )
    }))
}

/// Rotates by `axis_deg`, attenuates the second axis by `pdl_db` and
/// rotates back.
pub fn apply_pdl(sig: &DualPolSignal, pdl_db: f64, axis_deg: f64) -> Result<DualPolSignal> {
    if !(pdl_db.is_finite() && pdl_db >= 0.0) {
        return Err(Error::Config("PDL must be >= 0 dB".into()));
    }
    let mut out = sig.clone();
    if pdl_db == 0.0 {
        return Ok(out);
    }
    let g = 10f64.powf(-pdl_db / 20.0);
    let theta = axis_deg.to_radians();
    rotate(&mut out, theta);
    out.y.iter_mut().for_each(|v| *v *= g);
    rotate(&mut out, -theta);
    Ok(out)
}

/// Phase in radians of the dispersion all-pass at baseband frequency `f`.
pub fn cd_phase(d_ps_per_nm: f64, lambda_nm: f64, f: f64) -> f64 {
    let d = d_ps_per_nm * 1e-3; // ps/nm -> s/m
    let lambda = lambda_nm * 1e-9;
    -PI * d * lambda * lambda * f * f / SPEED_OF_LIGHT
}

/// All-pass `H(f) = exp(-i pi D lambda^2 f^2 / c)` on both polarizations.
pub fn apply_cd(sig: &DualPolSignal, d_ps_per_nm: f64, lambda_nm: f64, fs: f64) -> Result<DualPolSignal> {
    if !d_ps_per_nm.is_finite() || !(lambda_nm > 0.0) {
        return Err(Error::Config("invalid dispersion parameters".into()));
    }
    if d_ps_per_nm == 0.0 {
        return Ok(sig.clone());
    }
    Ok(filter_each(sig, fs, |f| {
        let h = Complex64::from_polar(1.0, cd_phase(d_ps_per_nm, lambda_nm, f));
        (h, h)
    }))
}

/// Mean per-sample power summed over both polarizations, taken over the
/// frame region when the frame start is known.
pub fn signal_power(sig: &DualPolSignal) -> f64 {
    let start = sig.true_frame_start.unwrap_or(0).min(sig.len());
    let n = sig.len() - start;
    if n == 0 {
        return 0.0;
    }
    (dsp::energy(&sig.x[start..]) + dsp::energy(&sig.y[start..])) / n as f64
}

/// Per-polarization ASE variance for a target OSNR:
/// `P_total F_s / (2 B_ref 10^(OSNR/10))`.
pub fn ase_variance(p_total: f64, osnr_db: f64, fs: f64, model: &OsnrModel) -> f64 {
    p_total * fs / (2.0 * model.reference_bandwidth_hz * 10f64.powf(osnr_db / 10.0))
}

/// Adds white complex Gaussian noise to both polarizations at the variance
/// implied by `osnr_db`. `None` leaves the signal untouched.
pub fn add_ase(
    sig: &DualPolSignal,
    osnr_db: Option<f64>,
    model: &OsnrModel,
    rng: &mut RngStream,
) -> Result<DualPolSignal> {
    let Some(osnr) = osnr_db.filter(|o| o.is_finite()) else {
        return Ok(sig.clone());
    };
    if !(model.reference_bandwidth_hz > 0.0) {
        return Err(Error::Config("reference bandwidth must be positive".into()));
    }
    let p = signal_power(sig);
    if !(p > 0.0) {
        return Err(Error::InvalidInput("cannot set OSNR on a zero-power signal".into()));
    }
    let sigma = ase_variance(p, osnr, sig.sample_rate, model).sqrt();
    let nx = complex_gaussian(rng, sig.len(), sigma);
    let ny = complex_gaussian(rng, sig.len(), sigma);
    let mut out = sig.clone();
    out.x.iter_mut().zip(nx).for_each(|(v, n)| *v += n);
    out.y.iter_mut().zip(ny).for_each(|(v, n)| *v += n);
    Ok(out)
}

/// Outcome of [`run_channel`]: the received signal and the pad that was
/// drawn.
#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub signal: DualPolSignal,
    pub pad: usize,
}

/// Applies every impairment of `profile` in the documented order. Each
/// random component draws from its own child stream of `rng`.
pub fn run_channel(
    sig: &DualPolSignal,
    profile: &ChannelProfile,
    osnr_model: &OsnrModel,
    rng: &RngStream,
) -> Result<ChannelOutput> {
    profile.validate()?;
    let fs = sig.sample_rate;
    let pad = draw_pad(profile.timing_pad, &mut rng.child("pad"));
    let mut r = apply_timing_pad(sig, pad);
    r = apply_cd(&r, profile.residual_cd_ps_per_nm, profile.center_wavelength_nm, fs)?;
    if profile.dgd_ps > 0.0 {
        r = apply_dgd(&r, profile.dgd_ps, profile.pmd_launch_deg, fs)?;
    }
    r = apply_pdl(&r, profile.pdl_db, profile.pdl_axis_deg)?;
    r = apply_cfo(&r, profile.cfo_hz, fs)?;
    if let Some(lw) = profile.linewidth_hz {
        r = apply_phase_noise(&r, lw, fs, &mut rng.child("phase_noise"))?;
    }
    r = add_ase(&r, profile.osnr_db, osnr_model, &mut rng.child("ase"))?;
    Ok(ChannelOutput { signal: r, pad })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_signal(n: usize, seed: u64) -> DualPolSignal {
        let mut rng = RngStream::new(seed, "sig");
        let x = complex_gaussian(&mut rng, n, 1.0);
        let y = complex_gaussian(&mut rng, n, 1.0);
        let mut s = DualPolSignal::new(x, y, 40e9).unwrap();
        s.true_frame_start = Some(0);
        s
    }

    fn max_diff(a: &DualPolSignal, b: &DualPolSignal) -> f64 {
        a.x.iter()
            .zip(&b.x)
            .chain(a.y.iter().zip(&b.y))
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn pad_shifts_frame_start() {
        let s = test_signal(50, 1);
        assert_eq!(apply_timing_pad(&s, 0), s);
        let p = apply_timing_pad(&s, 100);
        assert_eq!(p.len(), 150);
        assert_eq!(p.true_frame_start, Some(100));
        assert!(p.x[..100].iter().all(|v| v.norm() == 0.0));
        let a = draw_pad([0, 2000], &mut RngStream::new(3, "pad"));
        let b = draw_pad([0, 2000], &mut RngStream::new(3, "pad"));
        assert_eq!(a, b);
        assert!(a <= 2000);
    }

    #[test]
    fn cfo_rotation() {
        let s = test_signal(64, 2);
        assert_eq!(apply_cfo(&s, 0.0, 40e9).unwrap(), s);
        let mut ones = DualPolSignal::new(vec![Complex64::new(1.0, 0.0); 4], vec![Complex64::new(1.0, 0.0); 4], 40e9).unwrap();
        ones = apply_cfo(&ones, 5e9, 40e9).unwrap();
        let step = (ones.x[1] / ones.x[0]).arg();
        assert!((step - PI / 4.0).abs() < 1e-12);
        let back = apply_cfo(&apply_cfo(&s, 3.3e9, 40e9).unwrap(), -3.3e9, 40e9).unwrap();
        assert!(max_diff(&back, &s) < 1e-12);
        assert!(matches!(apply_cfo(&s, 21e9, 40e9), Err(Error::Config(_))));
    }

    #[test]
    fn cfo_composes_additively() {
        let s = test_signal(256, 3);
        let two = apply_cfo(&apply_cfo(&s, 1.1e9, 40e9).unwrap(), 2.2e9, 40e9).unwrap();
        let one = apply_cfo(&s, 3.3e9, 40e9).unwrap();
        assert!(max_diff(&one, &two) < 1e-10);
    }

    #[test]
    fn phase_noise_is_common_and_unimodular() {
        let s = test_signal(1000, 4);
        let mut rng = RngStream::new(9, "pn");
        assert_eq!(apply_phase_noise(&s, 0.0, 40e9, &mut rng).unwrap(), s);
        let out = apply_phase_noise(&s, 1e5, 40e9, &mut rng).unwrap();
        for k in 0..s.len() {
            assert!((out.x[k].norm() - s.x[k].norm()).abs() < 1e-12);
            let px = (out.x[k] / s.x[k]).arg();
            let py = (out.y[k] / s.y[k]).arg();
            assert!((px - py).abs() < 1e-9);
        }
        assert!((out.energy() - s.energy()).abs() < 1e-9 * s.energy());
    }

    #[test]
    fn phase_noise_variance_matches_wiener_law() {
        // Closed form: var(phi_k - phi_0) = 2 pi linewidth k / F_s.
        let k = 100_000;
        let expected = 2.0 * PI * 1e5 * k as f64 / 40e9;
        assert!((expected - 1.5708).abs() < 1e-3);
        let ones = DualPolSignal::new(
            vec![Complex64::new(1.0, 0.0); k + 1],
            vec![Complex64::new(1.0, 0.0); k + 1],
            40e9,
        )
        .unwrap();
        let realizations = 500;
        let mut acc = 0.0;
        for i in 0..realizations {
            let mut rng = RngStream::new(i, "wiener");
            let out = apply_phase_noise(&ones, 1e5, 40e9, &mut rng).unwrap();
            // Unwrap by summing per-sample increments.
            let total: f64 = out.x.windows(2).map(|w| (w[1] / w[0]).arg()).sum();
            acc += total * total;
        }
        let var = acc / realizations as f64;
        assert!((var / expected - 1.0).abs() < 0.1, "var {var} expected {expected}");
    }

    #[test]
    fn dgd_identity_and_energy() {
        let s = test_signal(300, 5);
        let out = apply_dgd(&s, 0.0, 0.0, 40e9).unwrap();
        assert!(max_diff(&out, &s) < 1e-10);
        let out = apply_dgd(&s, 37.0, 45.0, 40e9).unwrap();
        assert!((out.energy() - s.energy()).abs() < 1e-9 * s.energy());
    }

    #[test]
    fn dgd_impulse_response() {
        // 50 ps at 40 GSa/s is two samples: X late by one, Y early by one.
        let n = 64;
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        x[20] = Complex64::new(1.0, 0.0);
        y[20] = Complex64::new(1.0, 0.0);
        let s = DualPolSignal::new(x, y, 40e9).unwrap();
        let out = apply_dgd(&s, 50.0, 0.0, 40e9).unwrap();
        let peak = |v: &[Complex64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap()
                .0
        };
        assert_eq!(peak(&out.x), 21);
        assert_eq!(peak(&out.y), 19);
        assert!((out.x[21].norm() - 1.0).abs() < 1e-10);
        assert!((out.y[19].norm() - 1.0).abs() < 1e-10);
        assert_eq!(ChannelProfile { dgd_ps: 50.0, ..ChannelProfile::neutral() }.dgd_offsets(40e9), (1.0, -1.0));
    }

    #[test]
    fn pdl_scaling() {
        let s = test_signal(100, 6);
        assert_eq!(apply_pdl(&s, 0.0, 30.0).unwrap(), s);
        let out = apply_pdl(&s, 6.0, 0.0).unwrap();
        let ratio = (dsp::energy(&out.y) / dsp::energy(&s.y)).sqrt();
        assert!((ratio - 0.501187).abs() < 1e-5);
        assert_eq!(out.x, s.x);

        let ones = DualPolSignal::new(
            vec![Complex64::new(1.0, 0.0); 8],
            vec![Complex64::new(1.0, 0.0); 8],
            40e9,
        )
        .unwrap();
        let out = apply_pdl(&ones, 10.0, 0.0).unwrap();
        assert!((dsp::energy(&out.x) / dsp::energy(&out.y) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn cd_is_all_pass() {
        let s = test_signal(1000, 7);
        assert_eq!(apply_cd(&s, 0.0, 1550.0, 40e9).unwrap(), s);
        let out = apply_cd(&s, 800.0, 1550.0, 40e9).unwrap();
        assert!((out.energy() - s.energy()).abs() < 1e-9 * s.energy());
        assert!(max_diff(&out, &s) > 0.1);
    }

    #[test]
    fn cd_phase_golden_value() {
        // pi * 0.8 s/m * (1550e-9 m)^2 * (2e10 Hz)^2 / 299792458 m/s
        let phase = cd_phase(800.0, 1550.0, 20e9);
        assert!((phase.abs() - CD_PHASE_800_20GHZ).abs() < 1e-9);
    }

    const CD_PHASE_800_20GHZ: f64 = 8.056_428_264_382_264;

    #[test]
    fn ase_variance_golden() {
        let v = ase_variance(1.0, 4.0, 40e9, &OsnrModel::default());
        assert!((v - 0.6369).abs() < 5e-4, "{v}");
    }

    #[test]
    fn ase_hits_target_osnr() {
        let s = test_signal(100_000, 8);
        let model = OsnrModel::default();
        let mut rng = RngStream::new(1, "ase");
        assert_eq!(add_ase(&s, None, &model, &mut rng).unwrap(), s);
        let out = add_ase(&s, Some(4.0), &model, &mut rng).unwrap();
        let noise_x: Vec<Complex64> = out.x.iter().zip(&s.x).map(|(a, b)| a - b).collect();
        let noise_y: Vec<Complex64> = out.y.iter().zip(&s.y).map(|(a, b)| a - b).collect();
        let n = s.len() as f64;
        let p_noise = (dsp::energy(&noise_x) + dsp::energy(&noise_y)) / n;
        let p_sig = signal_power(&s);
        let osnr = 10.0 * (p_sig * 40e9 / (p_noise * model.reference_bandwidth_hz)).log10();
        assert!((osnr - 4.0).abs() < 0.1, "measured {osnr}");
        // whiteness
        let lag1: Complex64 = noise_x.windows(2).map(|w| w[1] * w[0].conj()).sum::<Complex64>() / n;
        let var = dsp::energy(&noise_x) / n;
        assert!(lag1.norm() / var < 0.01);
    }

    #[test]
    fn ase_rejects_silence() {
        let z = DualPolSignal::new(vec![Complex64::new(0.0, 0.0); 10], vec![Complex64::new(0.0, 0.0); 10], 40e9).unwrap();
        let mut rng = RngStream::new(1, "ase");
        assert!(matches!(
            add_ase(&z, Some(10.0), &OsnrModel::default(), &mut rng),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn neutral_channel_only_pads() {
        let s = test_signal(500, 9);
        let mut profile = ChannelProfile::neutral();
        let out = run_channel(&s, &profile, &OsnrModel::default(), &RngStream::new(1, "ch")).unwrap();
        assert_eq!(out.pad, 1000);
        assert_eq!(out.signal, apply_timing_pad(&s, 1000));

        profile.cfo_hz = 5e9;
        let out = run_channel(&s, &profile, &OsnrModel::default(), &RngStream::new(1, "ch")).unwrap();
        let want = apply_cfo(&apply_timing_pad(&s, 1000), 5e9, 40e9).unwrap();
        assert_eq!(out.signal, want);
    }

    #[test]
    fn channel_is_deterministic() {
        let s = test_signal(500, 10);
        let profile = ChannelProfile {
            cfo_hz: 1e9,
            osnr_db: Some(8.0),
            dgd_ps: 50.0,
            pdl_db: 3.0,
            residual_cd_ps_per_nm: 400.0,
            linewidth_hz: Some(1e5),
            timing_pad: [0, 2000],
            ..ChannelProfile::neutral()
        };
        let rng = RngStream::new(77, "trial");
        let a = run_channel(&s, &profile, &OsnrModel::default(), &rng).unwrap();
        let b = run_channel(&s, &profile, &OsnrModel::default(), &rng).unwrap();
        assert_eq!(a.signal, b.signal);
        assert_eq!(a.pad, b.pad);
    }

    #[test]
    fn dispersion_commutes_with_polarization_elements() {
        let s = test_signal(2048, 11);
        let fs = 40e9;
        let a = apply_pdl(&apply_dgd(&apply_cd(&s, 400.0, 1550.0, fs).unwrap(), 50.0, 45.0, fs).unwrap(), 3.0, 0.0).unwrap();
        let b = apply_cd(&apply_pdl(&apply_dgd(&s, 50.0, 45.0, fs).unwrap(), 3.0, 0.0).unwrap(), 400.0, 1550.0, fs).unwrap();
        assert!(max_diff(&a, &b) < 1e-9);
    }
}
