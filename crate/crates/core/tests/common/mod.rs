#![allow(dead_code)]

use pdm_sync::channel::{run_channel, ChannelProfile, OsnrModel};
use pdm_sync::dsp::RngStream;
use pdm_sync::framer::{random_frame, DualPolSignal, FrameConfig};
use pdm_sync::seqgen::{training_pair, GolayPair};
use pdm_sync::sync::SyncConfig;

pub const DELTA_F: f64 = 78.125e6;

pub fn gcs() -> GolayPair {
    training_pair().unwrap()
}

pub fn frame_cfg(n_data_symbols: usize, use_pn: bool) -> FrameConfig {
    FrameConfig {
        n_data_symbols,
        use_pn,
        ..FrameConfig::default()
    }
}

/// A frame with `n_data` payload symbols through `profile`, fixed pad.
pub fn received(profile: &ChannelProfile, pad: usize, n_data: usize, use_pn: bool, seed: u64) -> DualPolSignal {
    let cfg = frame_cfg(n_data, use_pn);
    let stream = RngStream::new(seed, "it");
    let (sig, _) = random_frame(&gcs(), &cfg, &mut stream.child("payload")).unwrap();
    let mut p = profile.clone();
    p.timing_pad = [pad, pad];
    run_channel(&sig, &p, &OsnrModel::default(), &stream).unwrap().signal
}

/// Receiver searching `[beta, pad + 2 N_s)`.
pub fn sync_cfg(r: &DualPolSignal, pad: usize, beta: usize, use_pn: bool) -> SyncConfig {
    let mut cfg = SyncConfig::new(frame_cfg(0, use_pn), gcs(), beta, 0..0).unwrap();
    let full = cfg.full_window(r.len());
    cfg.search_window = full.start..(pad + 2 * 558).min(full.end);
    cfg
}

pub fn neutral() -> ChannelProfile {
    ChannelProfile::neutral()
}
