//! Joint frame and frequency synchronization on the Alamouti training block.
//!
//! Frame timing uses the cross-polarization products between the PN-weighted
//! first training symbol and the conjugate-reversed second symbol. With the
//! training arrangement `[p·A, -B*; p·B, A*]` the plain products collapse to
//! `det(H) (|a|^2 + |b|^2)` for any frequency-flat Jones matrix `H`, so the
//! metric peaks at the frame start regardless of polarization rotation or
//! PDL. A relative delay `alpha` between the two received polarizations is
//! searched over `[-beta, beta]`.
//!
//! Frequency synchronization splits the offset into a fractional part, read
//! from the phase step the offset leaves between the prefix and body terms of
//! the same products, and an integer part, found by correlating the spectrum
//! of the de-weighted first symbol against the known training spectra.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{self, PnSequence};
use crate::error::{Error, Result};
use crate::framer::{subcarrier_map, DualPolSignal, FrameConfig};
use crate::seqgen::GolayPair;

/// How the second factor of each timing product is formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductForm {
    /// Plain products, no conjugation.
    #[default]
    Plain,
    /// Conjugates the second-symbol factor. Kept for comparison only.
    ConjugatePartner,
}

#[derive(Debug, Clone)]
pub struct SyncConfig {
    /// Largest relative polarization delay searched, in samples.
    pub beta: usize,
    pub frame: FrameConfig,
    pub gcs: GolayPair,
    pub pn: PnSequence,
    /// Candidate frame starts `d`.
    pub search_window: Range<usize>,
    pub product_form: ProductForm,
    /// Scale applied to the fractional-offset phase.
    pub frac_gain: f64,
}

impl SyncConfig {
    pub fn new(frame: FrameConfig, gcs: GolayPair, beta: usize, search_window: Range<usize>) -> Result<Self> {
        frame.validate()?;
        if gcs.len() != frame.data_subcarriers {
            return Err(Error::Config(format!(
                "training pair length {} does not match {} data subcarriers",
                gcs.len(),
                frame.data_subcarriers
            )));
        }
        let pn = frame.pn()?;
        Ok(Self {
            beta,
            frame,
            gcs,
            pn,
            search_window,
            product_form: ProductForm::Plain,
            frac_gain: 1.0,
        })
    }

    /// Samples the correlation reaches past a candidate `d` (excluding the
    /// relative delay).
    pub fn span(&self) -> usize {
        2 * self.frame.symbol_len()
    }

    /// The widest window that fits a buffer of `len` samples.
    pub fn full_window(&self, len: usize) -> Range<usize> {
        let end = (len + 1).saturating_sub(self.span() + self.beta);
        self.beta..end.max(self.beta)
    }

    fn check_window(&self, len: usize) -> Result<()> {
        let w = &self.search_window;
        if w.is_empty() {
            return Err(Error::Window("search window is empty".into()));
        }
        if w.start < self.beta {
            return Err(Error::Window(format!(
                "window start {} is below beta {}",
                w.start, self.beta
            )));
        }
        if w.end - 1 + self.beta + self.span() > len {
            return Err(Error::Window(format!(
                "window {}..{} needs {} samples, buffer has {len}",
                w.start,
                w.end,
                w.end - 1 + self.beta + self.span()
            )));
        }
        Ok(())
    }
}

/// Estimator outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncEstimate {
    pub d_hat_x: usize,
    pub d_hat_y: usize,
    /// Delay of Y relative to X, in samples.
    pub alpha_hat: i64,
    /// Fractional offset in subcarrier spacings.
    pub eps_hat: f64,
    /// Integer offset in subcarrier spacings.
    pub mu_hat: i64,
    pub nu_hat_hz: f64,
}

/// Metric traces kept for inspection and plotting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricTrace {
    /// `d` of the first entry of `m_x`/`m_y`.
    pub d_start: usize,
    pub m_x: Vec<f64>,
    pub m_y: Vec<f64>,
    pub best_alpha_x: Vec<i64>,
    pub best_alpha_y: Vec<i64>,
    /// `mu` of the first entry of `xi`.
    pub mu_start: i64,
    pub xi: Vec<f64>,
}

/// Frame-timing result.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSync {
    pub d_hat_x: usize,
    pub d_hat_y: usize,
    pub alpha_hat: i64,
    pub trace: MetricTrace,
}

/// Offsets `N_r + mod(N_cp - n, N)` of the second-symbol partner of sample
/// `n`.
fn partner_offsets(frame: &FrameConfig) -> Vec<usize> {
    let n_fft = frame.fft_size as i64;
    let ncp = frame.cp_len as i64;
    let nr = frame.pair_offset();
    (0..frame.symbol_len() as i64)
        .map(|n| nr + (ncp - n).rem_euclid(n_fft) as usize)
        .collect()
}

#[inline]
fn partner(form: ProductForm, v: Complex64) -> Complex64 {
    match form {
        ProductForm::Plain => v,
        ProductForm::ConjugatePartner => v.conj(),
    }
}

/// `P_x(d; alpha)` summed over `n` in `range`, straight from the product
/// definitions.
fn p_x_terms(
    r: &DualPolSignal,
    d: usize,
    alpha: i64,
    pn: &[f64],
    offsets: &[usize],
    form: ProductForm,
    range: Range<usize>,
) -> Complex64 {
    let dy = (d as i64 + alpha) as usize;
    range
        .map(|n| {
            let a = r.x[d + n] * partner(form, r.y[dy + offsets[n]]);
            let b = r.y[dy + n] * partner(form, r.x[d + offsets[n]]);
            (a - b) * pn[n]
        })
        .sum()
}

/// `P_y(d; alpha)` over `n` in `range`.
fn p_y_terms(
    r: &DualPolSignal,
    d: usize,
    alpha: i64,
    pn: &[f64],
    offsets: &[usize],
    form: ProductForm,
    range: Range<usize>,
) -> Complex64 {
    let dx = (d as i64 - alpha) as usize;
    range
        .map(|n| {
            let a = r.x[dx + n] * partner(form, r.y[d + offsets[n]]);
            let b = r.y[d + n] * partner(form, r.x[dx + offsets[n]]);
            (a - b) * pn[n]
        })
        .sum()
}

/// `(P_x(d; alpha), P_y(d; alpha))`.
///
/// ```text
/// P_x = sum_n p(n) [ r_x(d+n) r_y(d+alpha+N_r+m_n) - r_y(d+alpha+n) r_x(d+N_r+m_n) ]
/// P_y = sum_n p(n) [ r_x(d-alpha+n) r_y(d+N_r+m_n) - r_y(d+n) r_x(d-alpha+N_r+m_n) ]
/// ```
///
/// with `m_n = mod(N_cp - n, N)` and `n = 0 .. N_s-1`.
pub fn timing_correlation(
    r: &DualPolSignal,
    d: usize,
    alpha: i64,
    cfg: &SyncConfig,
) -> Result<(Complex64, Complex64)> {
    let reach = cfg.span() as i64 - 1;
    let lo = d as i64 - alpha.abs();
    let hi = d as i64 + alpha.abs() + reach;
    if lo < 0 || hi >= r.len() as i64 {
        return Err(Error::Window(format!(
            "d={d}, alpha={alpha} reaches samples {lo}..={hi} of {}",
            r.len()
        )));
    }
    let offsets = partner_offsets(&cfg.frame);
    let pn = cfg.pn.values();
    let ns = cfg.frame.symbol_len();
    let px = p_x_terms(r, d, alpha, pn, &offsets, cfg.product_form, 0..ns);
    let py = p_y_terms(r, d, alpha, pn, &offsets, cfg.product_form, 0..ns);
    Ok((px, py))
}

/// `(R_x(d), R_y(d))`: twice the energy of each polarization over `N_s`
/// samples from `d`.
pub fn timing_energy(r: &DualPolSignal, d: usize, cfg: &SyncConfig) -> Result<(f64, f64)> {
    let ns = cfg.frame.symbol_len();
    if d + ns > r.len() {
        return Err(Error::Window(format!("energy window at {d} exceeds buffer of {}", r.len())));
    }
    Ok((
        2.0 * dsp::energy(&r.x[d..d + ns]),
        2.0 * dsp::energy(&r.y[d..d + ns]),
    ))
}

/// Relative delays in tie-break order: 0, -1, 1, -2, 2, ...
fn alpha_order(beta: usize) -> Vec<i64> {
    let mut v = vec![0i64];
    for a in 1..=beta as i64 {
        v.push(-a);
        v.push(a);
    }
    v
}

/// `R(d)` for every `d` in `w`, each summed directly so that identical
/// windows give bit-identical energies.
fn window_energies(v: &[Complex64], w: Range<usize>, n: usize) -> Vec<f64> {
    w.map(|d| 2.0 * dsp::energy(&v[d..d + n])).collect()
}

/// Windows below this fraction of the largest window energy in the search
/// get a zero metric.
pub const ENERGY_FLOOR: f64 = 0.5;

/// Timing metrics over the search window and their maximizers.
///
/// `M(d) = max_alpha |P(d; alpha)|^2 / R(d)^2`; ties go to the smallest `d`,
/// then the smallest `|alpha|`, then negative `alpha`.
pub fn frame_sync(r: &DualPolSignal, cfg: &SyncConfig) -> Result<FrameSync> {
    cfg.check_window(r.len())?;
    let w = cfg.search_window.clone();
    let ns = cfg.frame.symbol_len();
    let offsets = partner_offsets(&cfg.frame);
    let pn = cfg.pn.values();
    let alphas = alpha_order(cfg.beta);
    let n_alpha = alphas.len();

    // P_y(d; alpha) = P_x(d - alpha; alpha), so one grid over
    // e in [start - beta, end + beta) serves both polarizations.
    let e0 = w.start - cfg.beta;
    let e1 = w.end + cfg.beta;
    let mut grid = vec![Complex64::new(0.0, 0.0); (e1 - e0) * n_alpha];
    let mut u = vec![Complex64::new(0.0, 0.0); ns];
    let mut v = vec![Complex64::new(0.0, 0.0); ns];
    for e in e0..e1 {
        for n in 0..ns {
            u[n] = r.x[e + n] * pn[n];
            v[n] = partner(cfg.product_form, r.x[e + offsets[n]]) * pn[n];
        }
        let row = &mut grid[(e - e0) * n_alpha..(e - e0 + 1) * n_alpha];
        for (slot, &alpha) in row.iter_mut().zip(&alphas) {
            let ey = e as i64 + alpha;
            if ey < 0 || (ey as usize) + cfg.span() > r.len() {
                continue;
            }
            let ey = ey as usize;
            let ys = &r.y[ey..ey + ns];
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..ns {
                acc += u[n] * partner(cfg.product_form, r.y[ey + offsets[n]]) - ys[n] * v[n];
            }
            *slot = acc;
        }
    }

    let rxs = window_energies(&r.x, w.clone(), ns);
    let rys = window_energies(&r.y, w.clone(), ns);
    // Windows that catch only a few samples of signal, or only noise, make
    // |P|^2 / R^2 a ratio of two small numbers. Score them as zero.
    let floor = |e: &[f64]| ENERGY_FLOOR * e.iter().copied().fold(0.0, f64::max);
    let (fx, fy) = (floor(&rxs), floor(&rys));
    let mut trace = MetricTrace {
        d_start: w.start,
        ..MetricTrace::default()
    };
    let mut best_x = (f64::NEG_INFINITY, w.start, 0i64);
    let mut best_y = (f64::NEG_INFINITY, w.start, 0i64);
    for d in w.clone() {
        let (rx, ry) = (rxs[d - w.start], rys[d - w.start]);
        let mut mx = (f64::NEG_INFINITY, 0i64);
        let mut my = (f64::NEG_INFINITY, 0i64);
        for (ai, &alpha) in alphas.iter().enumerate() {
            let gx = grid[(d - e0) * n_alpha + ai];
            let ey = (d as i64 - alpha - e0 as i64) as usize;
            let gy = grid[ey * n_alpha + ai];
            let vx = if rx > fx && rx > 0.0 { gx.norm_sqr() / (rx * rx) } else { 0.0 };
            let vy = if ry > fy && ry > 0.0 { gy.norm_sqr() / (ry * ry) } else { 0.0 };
            if vx > mx.0 {
                mx = (vx, alpha);
            }
            if vy > my.0 {
                my = (vy, alpha);
            }
        }
        trace.m_x.push(mx.0);
        trace.m_y.push(my.0);
        trace.best_alpha_x.push(mx.1);
        trace.best_alpha_y.push(my.1);
        if mx.0 > best_x.0 {
            best_x = (mx.0, d, mx.1);
        }
        if my.0 > best_y.0 {
            best_y = (my.0, d, my.1);
        }
    }
    Ok(FrameSync {
        d_hat_x: best_x.1,
        d_hat_y: best_y.1,
        alpha_hat: best_x.2,
        trace,
    })
}

/// Fractional offset from the products at `(d_hat, alpha_hat)`.
///
/// In the plain products the carrier phase of every term is
/// `phi (2d + alpha + N_r + N_cp)` for `n <= N_cp` and that plus
/// `2 pi nu / delta_f` for the body terms, because the partner index wraps by
/// `N` there. The phase step between the two partial sums is therefore the
/// fractional offset, independent of where the frame sits in the buffer.
/// The result lies in `(-0.5, 0.5]` times `frac_gain`, clamped to `[-1, 1]`.
pub fn frac_cfo(r: &DualPolSignal, d_hat: usize, alpha_hat: i64, cfg: &SyncConfig) -> Result<f64> {
    timing_correlation(r, d_hat, alpha_hat, cfg)?;
    let offsets = partner_offsets(&cfg.frame);
    let pn = cfg.pn.values();
    let ncp = cfg.frame.cp_len;
    let ns = cfg.frame.symbol_len();
    let head = p_x_terms(r, d_hat, alpha_hat, pn, &offsets, ProductForm::Plain, 0..ncp + 1);
    let body = p_x_terms(r, d_hat, alpha_hat, pn, &offsets, ProductForm::Plain, ncp + 1..ns);
    let z = body * head.conj();
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::Degenerate("fractional-offset correlation vanished".into()));
    }
    Ok((cfg.frac_gain * z.arg() / (2.0 * PI)).clamp(-1.0, 1.0))
}

/// Integer offsets in tie-break order over `[-N/2, N/2 - 1]`.
fn mu_order(n: usize) -> Vec<i64> {
    let half = (n / 2) as i64;
    let mut v = vec![0i64];
    for m in 1..=half {
        v.push(-m);
        if m < half {
            v.push(m);
        }
    }
    v
}

/// Integer offset from a buffer whose fractional offset was already removed.
///
/// Returns `mu_hat` and the correlation metric over `mu = -N/2 .. N/2-1`.
pub fn integer_cfo(r: &DualPolSignal, d_hat: usize, cfg: &SyncConfig) -> Result<(i64, Vec<f64>)> {
    let f = &cfg.frame;
    let start = d_hat + f.cp_len;
    if start + f.fft_size > r.len() {
        return Err(Error::Window(format!("first training symbol at {d_hat} exceeds buffer")));
    }
    let pn = cfg.pn.values();
    let body: Vec<Complex64> = (0..f.fft_size)
        .map(|k| r.x[start + k] * pn[f.cp_len + k])
        .collect();
    let rf = dsp::fft(&body)?;
    let denom: f64 = dsp::energy(&rf);
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Degenerate("training spectrum is all zero".into()));
    }
    let ta = subcarrier_map(cfg.gcs.a(), f)?;
    let tb = subcarrier_map(cfg.gcs.b(), f)?;
    let template: Vec<(usize, Complex64)> = ta
        .iter()
        .zip(&tb)
        .enumerate()
        .filter(|(_, (a, b))| (*a + *b).norm() > 0.0)
        .map(|(v, (a, b))| (v, (a + b).conj()))
        .collect();
    let n = f.fft_size as i64;
    let half = n / 2;
    let xi_at = |mu: i64| -> f64 {
        let acc: Complex64 = template
            .iter()
            .map(|&(v, t)| t * rf[(v as i64 + mu).rem_euclid(n) as usize])
            .sum();
        acc.norm_sqr() / (denom * denom)
    };
    let xi: Vec<f64> = (-half..half).map(xi_at).collect();
    let mut best = (f64::NEG_INFINITY, 0i64);
    for mu in mu_order(f.fft_size) {
        let v = xi[(mu + half) as usize];
        if v > best.0 {
            best = (v, mu);
        }
    }
    Ok((best.1, xi))
}

/// Multiplies both polarizations by `exp(-i 2 pi nu k / F_s)`.
pub fn compensate_cfo(r: &DualPolSignal, nu_hat_hz: f64, fs: f64) -> DualPolSignal {
    let mut out = r.clone();
    if nu_hat_hz != 0.0 {
        let step = -2.0 * PI * nu_hat_hz / fs;
        out.map_pairs(|k, x, y| {
            let w = Complex64::from_polar(1.0, step * k as f64);
            (x * w, y * w)
        });
    }
    out
}

/// Carrier-offset estimate and the integer-search trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CfoEstimate {
    pub eps_hat: f64,
    pub mu_hat: i64,
    pub nu_hat_hz: f64,
    pub xi: Vec<f64>,
}

/// Fractional estimate, fractional compensation on a copy of the first
/// training symbol, then the integer search; `nu = (eps + mu) delta_f`.
pub fn estimate_cfo(r: &DualPolSignal, d_hat: usize, alpha_hat: i64, cfg: &SyncConfig) -> Result<CfoEstimate> {
    let eps_hat = frac_cfo(r, d_hat, alpha_hat, cfg)?;
    let df = cfg.frame.delta_f();
    let ns = cfg.frame.symbol_len();
    // Only the first symbol's X samples feed the integer search.
    let step = -2.0 * PI * eps_hat * df / r.sample_rate;
    let mut x = vec![Complex64::new(0.0, 0.0); r.len()];
    for k in d_hat..(d_hat + ns).min(r.len()) {
        x[k] = r.x[k] * Complex64::from_polar(1.0, step * k as f64);
    }
    let work = DualPolSignal {
        x,
        y: Vec::new(),
        sample_rate: r.sample_rate,
        true_frame_start: None,
    };
    let (mu_hat, xi) = integer_cfo(&work, d_hat, cfg)?;
    Ok(CfoEstimate {
        eps_hat,
        mu_hat,
        nu_hat_hz: (eps_hat + mu_hat as f64) * df,
        xi,
    })
}

/// Frame timing followed by carrier-offset estimation.
pub fn synchronize(r: &DualPolSignal, cfg: &SyncConfig) -> Result<(SyncEstimate, MetricTrace)> {
    let fs = frame_sync(r, cfg)?;
    let cfo = estimate_cfo(r, fs.d_hat_x, fs.alpha_hat, cfg)?;
    let mut trace = fs.trace;
    trace.mu_start = -((cfg.frame.fft_size / 2) as i64);
    trace.xi = cfo.xi;
    Ok((
        SyncEstimate {
            d_hat_x: fs.d_hat_x,
            d_hat_y: fs.d_hat_y,
            alpha_hat: fs.alpha_hat,
            eps_hat: cfo.eps_hat,
            mu_hat: cfo.mu_hat,
            nu_hat_hz: cfo.nu_hat_hz,
        },
        trace,
    ))
}
