//! Signal files shared by the command-line tools.
//!
//! A signal is stored as raw little-endian `f32` quadruples
//! `(re_x, im_x, re_y, im_y)`, one per sample, next to a TOML header at
//! `<path>.hdr` that records the frame configuration, the frame label and
//! the sample count.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framer::{DualPolSignal, FrameConfig, FrameLabel};
use crate::seqgen::GolayPair;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalHeader {
    pub format_version: u32,
    pub n_samples: usize,
    pub sample_rate: f64,
    pub true_frame_start: Option<usize>,
    pub frame_cfg: FrameConfig,
    pub label: Option<FrameLabel>,
}

pub fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

/// Writes `sig` and its header.
pub fn write_signal(path: &Path, sig: &DualPolSignal, frame_cfg: &FrameConfig, label: Option<&FrameLabel>) -> Result<()> {
    let mut bytes = Vec::with_capacity(sig.len() * 16);
    for (x, y) in sig.x.iter().zip(&sig.y) {
        for v in [x.re, x.im, y.re, y.im] {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let header = SignalHeader {
        format_version: FORMAT_VERSION,
        n_samples: sig.len(),
        sample_rate: sig.sample_rate,
        true_frame_start: sig.true_frame_start,
        frame_cfg: frame_cfg.clone(),
        label: label.cloned(),
    };
    let text = toml::to_string(&header).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, bytes)?;
    fs::write(header_path(path), text)?;
    Ok(())
}

/// Reads a signal written by [`write_signal`].
pub fn read_signal(path: &Path) -> Result<(DualPolSignal, SignalHeader)> {
    let text = fs::read_to_string(header_path(path))?;
    let header: SignalHeader = toml::from_str(&text).map_err(|e| Error::Parse(format!("signal header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported signal format version {}",
            header.format_version
        )));
    }
    let bytes = fs::read(path)?;
    if bytes.len() != header.n_samples * 16 {
        return Err(Error::Parse(format!(
            "expected {} bytes for {} samples, found {}",
            header.n_samples * 16,
            header.n_samples,
            bytes.len()
        )));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    let (x, y) = vals
        .chunks_exact(4)
        .map(|q| (Complex64::new(q[0], q[1]), Complex64::new(q[2], q[3])))
        .unzip();
    let mut sig = DualPolSignal::new(x, y, header.sample_rate)?;
    sig.true_frame_start = header.true_frame_start;
    Ok((sig, header))
}

#[derive(Serialize)]
struct PairRow {
    index: usize,
    a_re: f64,
    a_im: f64,
    b_re: f64,
    b_im: f64,
}

/// One row per element of the pair.
pub fn write_pair_csv(path: &Path, pair: &GolayPair) -> Result<()> {
    let mut w = csv::Writer::from_writer(fs::File::create(path)?);
    for (index, (a, b)) in pair.a().iter().zip(pair.b()).enumerate() {
        w.serialize(PairRow {
            index,
            a_re: a.re,
            a_im: a.im,
            b_re: b.re,
            b_im: b.im,
        })
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
