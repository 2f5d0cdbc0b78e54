//! Monte-Carlo campaigns over one swept impairment, plus single-shot metric
//! traces.
//!
//! Every trial owns a seed derived from `(master_seed, point, trial)`, and all
//! of its randomness comes from labelled children of that seed. Results are
//! collected in grid order before aggregation, so a campaign produces the
//! same summary bytes whatever the thread count.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{run_channel, ChannelProfile, OsnrModel};
use crate::dsp::RngStream;
use crate::error::{Error, Result};
use crate::framer::{random_frame, FrameConfig};
use crate::seqgen::{training_pair, GolayPair};
use crate::sync::{synchronize, MetricTrace, ProductForm, SyncConfig};

/// Bumped whenever the summary layout changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    OsnrDb,
    PdlDb,
    /// Residual chromatic dispersion in ps/nm.
    ResidualCd,
    DgdPs,
    CfoHz,
}

impl SweepVariable {
    /// `base` with this variable set to `value`.
    pub fn apply(self, base: &ChannelProfile, value: f64) -> ChannelProfile {
        let mut p = base.clone();
        match self {
            SweepVariable::OsnrDb => p.osnr_db = Some(value),
            SweepVariable::PdlDb => p.pdl_db = value,
            SweepVariable::ResidualCd => p.residual_cd_ps_per_nm = value,
            SweepVariable::DgdPs => p.dgd_ps = value,
            SweepVariable::CfoHz => p.cfo_hz = value,
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

/// Receiver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncSettings {
    pub beta: usize,
    /// Candidate starts run from `beta` to the largest pad plus this many
    /// samples.
    pub window_margin: usize,
    pub product_form: ProductForm,
    pub frac_gain: f64,
}

impl Default for SyncSettings {
    fn default() -> Self {
        Self {
            beta: 8,
            window_margin: 558,
            product_form: ProductForm::Plain,
            frac_gain: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    /// File names inside the output directory.
    pub summary: String,
    pub trials: String,
    /// Store per-trial wall time in the trial records. Off by default so
    /// that reruns produce identical files.
    pub record_wall_time: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            summary: "summary.json".into(),
            trials: "trials.csv".into(),
            record_wall_time: false,
        }
    }
}

fn default_trials() -> usize {
    200
}

fn default_data_symbols() -> usize {
    10
}

fn default_threads() -> usize {
    1
}

/// One campaign: a base channel, one swept variable, trials per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub frame_cfg: FrameConfig,
    #[serde(default)]
    pub base_profile: ChannelProfile,
    #[serde(default)]
    pub osnr_model: OsnrModel,
    pub sweep: Sweep,
    #[serde(default = "default_trials")]
    pub trials_per_point: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Overrides `frame_cfg.n_data_symbols`.
    #[serde(default = "default_data_symbols")]
    pub n_data_symbols: usize,
    #[serde(default)]
    pub sync: SyncSettings,
    /// Worker threads; 1 runs everything on the calling thread. Left out of
    /// serialized output, which must not depend on it.
    #[serde(default = "default_threads", skip_serializing)]
    pub threads: usize,
    #[serde(default)]
    pub outputs: Outputs,
}

impl CampaignSpec {
    pub fn new(name: &str, base_profile: ChannelProfile, sweep: Sweep) -> Self {
        Self {
            name: name.into(),
            frame_cfg: FrameConfig::default(),
            base_profile,
            osnr_model: OsnrModel::default(),
            sweep,
            trials_per_point: default_trials(),
            master_seed: 0,
            n_data_symbols: default_data_symbols(),
            sync: SyncSettings::default(),
            threads: default_threads(),
            outputs: Outputs::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Frame configuration with `n_data_symbols` applied.
    pub fn frame(&self) -> FrameConfig {
        FrameConfig {
            n_data_symbols: self.n_data_symbols,
            ..self.frame_cfg.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.values.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials_per_point must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.outputs.summary.is_empty() || self.outputs.trials.is_empty() {
            return Err(Error::Config("output file names must be nonempty".into()));
        }
        self.frame().validate()?;
        for &v in &self.sweep.values {
            self.sweep.variable.apply(&self.base_profile, v).validate()?;
        }
        Ok(())
    }

    /// Receiver configuration for a buffer of `len` samples.
    pub fn sync_config(&self, gcs: &GolayPair, len: usize) -> Result<SyncConfig> {
        let mut cfg = SyncConfig::new(self.frame(), gcs.clone(), self.sync.beta, 0..0)?;
        cfg.product_form = self.sync.product_form;
        cfg.frac_gain = self.sync.frac_gain;
        let full = cfg.full_window(len);
        let end = (self.base_profile.timing_pad[1] + self.sync.window_margin + 1).min(full.end);
        cfg.search_window = full.start..end.max(full.start);
        Ok(cfg)
    }
}

/// Seed owning all randomness of one trial.
pub fn trial_seed(master_seed: u64, point: usize, trial: usize) -> u64 {
    let mut rng = RngStream::new(master_seed, format!("p{point}/t{trial}"));
    rand::RngCore::next_u64(rng.rng())
}

/// Outcome of one trial. Errors inside the chain are recorded in `error`
/// and count as synchronization failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub point_index: usize,
    pub point_value: f64,
    pub trial_index: usize,
    pub trial_seed: u64,
    pub pad: usize,
    pub true_d_x: i64,
    pub true_d_y: i64,
    pub true_alpha: i64,
    pub nu_hz: f64,
    pub dgd_ps: f64,
    pub d_hat_x: Option<i64>,
    pub d_hat_y: Option<i64>,
    pub alpha_hat: Option<i64>,
    pub nu_hat_hz: Option<f64>,
    pub d_err_x: Option<i64>,
    pub d_err_y: Option<i64>,
    pub alpha_err: Option<i64>,
    pub cfo_err_hz: Option<f64>,
    pub sync_success: bool,
    pub error: Option<String>,
    pub wall_time_s: Option<f64>,
}

/// Everything a trial needs that does not change between trials.
pub struct TrialContext {
    pub spec: CampaignSpec,
    pub gcs: GolayPair,
}

impl TrialContext {
    pub fn new(spec: CampaignSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            gcs: training_pair()?,
        })
    }
}

/// Runs trial `trial` of grid point `point`.
pub fn run_trial(ctx: &TrialContext, point: usize, trial: usize) -> TrialReport {
    let started = Instant::now();
    let spec = &ctx.spec;
    let value = spec.sweep.values[point];
    let profile = spec.sweep.variable.apply(&spec.base_profile, value);
    let seed = trial_seed(spec.master_seed, point, trial);
    let stream = RngStream::new(seed, "trial");
    let fs = spec.frame_cfg.sample_rate;
    let (off_x, off_y) = if profile.dgd_ps > 0.0 {
        profile.dgd_offsets(fs)
    } else {
        (0.0, 0.0)
    };

    let mut report = TrialReport {
        point_index: point,
        point_value: value,
        trial_index: trial,
        trial_seed: seed,
        pad: 0,
        true_d_x: 0,
        true_d_y: 0,
        true_alpha: 0,
        nu_hz: profile.cfo_hz,
        dgd_ps: profile.dgd_ps,
        d_hat_x: None,
        d_hat_y: None,
        alpha_hat: None,
        nu_hat_hz: None,
        d_err_x: None,
        d_err_y: None,
        alpha_err: None,
        cfo_err_hz: None,
        sync_success: false,
        error: None,
        wall_time_s: None,
    };

    let outcome = (|| -> Result<()> {
        let (frame, _) = random_frame(&ctx.gcs, &spec.frame(), &mut stream.child("payload"))?;
        let out = run_channel(&frame, &profile, &spec.osnr_model, &stream)?;
        report.pad = out.pad;
        report.true_d_x = out.pad as i64 + off_x.round() as i64;
        report.true_d_y = out.pad as i64 + off_y.round() as i64;
        report.true_alpha = report.true_d_y - report.true_d_x;
        let cfg = spec.sync_config(&ctx.gcs, out.signal.len())?;
        let (est, _) = synchronize(&out.signal, &cfg)?;
        let (dx, dy) = (est.d_hat_x as i64, est.d_hat_y as i64);
        report.d_hat_x = Some(dx);
        report.d_hat_y = Some(dy);
        report.alpha_hat = Some(est.alpha_hat);
        report.nu_hat_hz = Some(est.nu_hat_hz);
        report.d_err_x = Some(dx - report.true_d_x);
        report.d_err_y = Some(dy - report.true_d_y);
        report.alpha_err = Some(est.alpha_hat - report.true_alpha);
        report.cfo_err_hz = Some(est.nu_hat_hz - profile.cfo_hz);
        report.sync_success = dx == report.true_d_x && dy == report.true_d_y;
        Ok(())
    })();
    if let Err(e) = outcome {
        report.error = Some(e.to_string());
    }
    if spec.outputs.record_wall_time {
        report.wall_time_s = Some(started.elapsed().as_secs_f64());
    }
    report
}

/// Aggregates for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub index: usize,
    pub value: f64,
    pub trials: usize,
    /// Trials with a nonzero timing error on either polarization, or that
    /// failed outright.
    pub sync_errors: usize,
    pub failed_trials: usize,
    pub sync_error_rate: f64,
    /// Statistics of `|nu_hat - nu|` over trials that produced an estimate.
    pub cfo_err_mean_hz: f64,
    pub cfo_err_max_hz: f64,
    pub cfo_err_p99_hz: f64,
    /// Mean of `(|d_err_x| + |d_err_y|) / 2`.
    pub mean_abs_d_err: f64,
    /// `(error, count)` pairs in ascending error order.
    pub timing_err_hist_x: Vec<(i64, usize)>,
    pub timing_err_hist_y: Vec<(i64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub config: CampaignSpec,
    pub points: Vec<PointSummary>,
}

impl SweepSummary {
    pub fn max_error_rate(&self) -> f64 {
        self.points.iter().map(|p| p.sync_error_rate).fold(0.0, f64::max)
    }

    pub fn max_cfo_err_hz(&self) -> f64 {
        self.points.iter().map(|p| p.cfo_err_max_hz).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn histogram(values: impl Iterator<Item = i64>) -> Vec<(i64, usize)> {
    let mut h = BTreeMap::new();
    for v in values {
        *h.entry(v).or_insert(0) += 1;
    }
    h.into_iter().collect()
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Aggregates trial reports. Input order does not matter: rows are taken in
/// `(point, trial)` order.
pub fn summarize(spec: &CampaignSpec, trials: &[TrialReport]) -> SweepSummary {
    let mut sorted: Vec<&TrialReport> = trials.iter().collect();
    sorted.sort_by_key(|t| (t.point_index, t.trial_index));
    let points = spec
        .sweep
        .values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            let rows: Vec<&TrialReport> = sorted.iter().copied().filter(|t| t.point_index == index).collect();
            let n = rows.len();
            let sync_errors = rows.iter().filter(|t| !t.sync_success).count();
            let failed_trials = rows.iter().filter(|t| t.error.is_some()).count();
            let mut cfo: Vec<f64> = rows.iter().filter_map(|t| t.cfo_err_hz).map(f64::abs).collect();
            let cfo_mean = if cfo.is_empty() {
                0.0
            } else {
                cfo.iter().sum::<f64>() / cfo.len() as f64
            };
            cfo.sort_by(f64::total_cmp);
            let d_errs: Vec<(i64, i64)> = rows
                .iter()
                .filter_map(|t| Some((t.d_err_x?, t.d_err_y?)))
                .collect();
            let mean_abs_d_err = if d_errs.is_empty() {
                0.0
            } else {
                d_errs.iter().map(|(x, y)| (x.abs() + y.abs()) as f64 / 2.0).sum::<f64>() / d_errs.len() as f64
            };
            PointSummary {
                index,
                value,
                trials: n,
                sync_errors,
                failed_trials,
                sync_error_rate: if n == 0 { 0.0 } else { sync_errors as f64 / n as f64 },
                cfo_err_mean_hz: cfo_mean,
                cfo_err_max_hz: cfo.last().copied().unwrap_or(0.0),
                cfo_err_p99_hz: percentile(&cfo, 0.99),
                mean_abs_d_err,
                timing_err_hist_x: histogram(d_errs.iter().map(|e| e.0)),
                timing_err_hist_y: histogram(d_errs.iter().map(|e| e.1)),
            }
        })
        .collect();
    SweepSummary {
        schema_version: SCHEMA_VERSION,
        config: spec.clone(),
        points,
    }
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub summary: SweepSummary,
    pub trials: Vec<TrialReport>,
}

/// Runs every trial of every grid point and aggregates.
pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignResult> {
    let ctx = TrialContext::new(spec.clone())?;
    let jobs: Vec<(usize, usize)> = (0..spec.sweep.values.len())
        .flat_map(|p| (0..spec.trials_per_point).map(move |t| (p, t)))
        .collect();
    let trials: Vec<TrialReport> = if spec.threads == 1 {
        jobs.iter().map(|&(p, t)| run_trial(&ctx, p, t)).collect()
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(|&(p, t)| run_trial(&ctx, p, t)).collect())
    };
    Ok(CampaignResult {
        summary: summarize(spec, &trials),
        trials,
    })
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Writes a `#`-prefixed provenance line holding the resolved config.
fn write_provenance(w: &mut impl Write, config: &impl Serialize) -> Result<()> {
    let json = serde_json::to_string(config).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(w, "# config: {json}")?;
    Ok(())
}

pub fn write_trials_csv(path: &Path, spec: &CampaignSpec, trials: &[TrialReport]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    write_provenance(&mut file, spec)?;
    let mut w = csv::Writer::from_writer(file);
    for t in trials {
        w.serialize(t).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials_csv(path: &Path) -> Result<Vec<TrialReport>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Writes the summary JSON and the trial CSV into `dir`; returns their paths.
pub fn write_campaign(dir: &Path, result: &CampaignResult) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let spec = &result.summary.config;
    let summary = dir.join(&spec.outputs.summary);
    let trials = dir.join(&spec.outputs.trials);
    fs::write(&summary, result.summary.to_json()? + "\n")?;
    write_trials_csv(&trials, spec, &result.trials)?;
    Ok((summary, trials))
}

/// Width of the region around the global maximum where the metric stays
/// within 3 dB of it.
pub fn plateau_width(m: &[f64]) -> usize {
    let Some((peak_at, &peak)) = m.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0))) else {
        return 0;
    };
    let half = peak / 2.0;
    let left = m[..peak_at].iter().rev().take_while(|&&v| v >= half).count();
    let right = m[peak_at + 1..].iter().take_while(|&&v| v >= half).count();
    left + 1 + right
}

/// A named single-trial setup for metric traces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceScenario {
    pub name: String,
    pub profile: ChannelProfile,
    pub beta: usize,
    pub seed: u64,
}

impl TraceScenario {
    pub fn names() -> &'static [&'static str] {
        &["delay20", "cfo5-osnr4", "neutral"]
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let mut profile = ChannelProfile::neutral();
        profile.timing_pad = [1000, 1000];
        let beta = match name {
            // 20-sample relative delay between the polarizations.
            "delay20" => {
                profile.dgd_ps = 500.0;
                profile.pmd_launch_deg = 0.0;
                20
            }
            "cfo5-osnr4" => {
                profile.cfo_hz = 5e9;
                profile.osnr_db = Some(4.0);
                8
            }
            "neutral" => 8,
            other => {
                return Err(Error::Config(format!(
                    "unknown scenario '{other}', expected one of {:?}",
                    Self::names()
                )))
            }
        };
        Ok(Self {
            name: name.into(),
            profile,
            beta,
            seed: 1,
        })
    }
}

/// Traces from one scenario.
#[derive(Debug, Clone)]
pub struct TraceSet {
    pub with_pn: MetricTrace,
    pub without_pn: MetricTrace,
    /// `Xi(mu)` with the carrier offset forced to +5 and -5 GHz.
    pub xi_pos: MetricTrace,
    pub xi_neg: MetricTrace,
}

fn trace_once(sc: &TraceScenario, profile: &ChannelProfile, use_pn: bool) -> Result<MetricTrace> {
    let frame = FrameConfig {
        use_pn,
        n_data_symbols: 2,
        ..FrameConfig::default()
    };
    let gcs = training_pair()?;
    let stream = RngStream::new(sc.seed, format!("trace/{}", sc.name));
    let (sig, _) = random_frame(&gcs, &frame, &mut stream.child("payload"))?;
    let out = run_channel(&sig, profile, &OsnrModel::default(), &stream)?;
    let mut cfg = SyncConfig::new(frame, gcs, sc.beta, 0..0)?;
    let full = cfg.full_window(out.signal.len());
    let end = (out.pad + 2 * cfg.frame.symbol_len()).min(full.end);
    cfg.search_window = full.start..end;
    Ok(synchronize(&out.signal, &cfg)?.1)
}

/// Runs the scenario with and without PN weighting, and with the carrier
/// offset at +5 and -5 GHz.
pub fn emit_traces(sc: &TraceScenario) -> Result<TraceSet> {
    let with_cfo = |nu: f64| {
        let mut p = sc.profile.clone();
        p.cfo_hz = nu;
        p
    };
    Ok(TraceSet {
        with_pn: trace_once(sc, &sc.profile, true)?,
        without_pn: trace_once(sc, &sc.profile, false)?,
        xi_pos: trace_once(sc, &with_cfo(5e9), true)?,
        xi_neg: trace_once(sc, &with_cfo(-5e9), true)?,
    })
}

#[derive(Serialize)]
struct TimingRow {
    d: usize,
    m_x: f64,
    m_y: f64,
    alpha_x: i64,
    alpha_y: i64,
}

#[derive(Serialize)]
struct XiRow {
    mu: i64,
    xi: f64,
}

pub fn write_timing_csv(path: &Path, trace: &MetricTrace, config: &impl Serialize) -> Result<()> {
    let mut file = fs::File::create(path)?;
    write_provenance(&mut file, config)?;
    let mut w = csv::Writer::from_writer(file);
    for i in 0..trace.m_x.len() {
        w.serialize(TimingRow {
            d: trace.d_start + i,
            m_x: trace.m_x[i],
            m_y: trace.m_y[i],
            alpha_x: trace.best_alpha_x[i],
            alpha_y: trace.best_alpha_y[i],
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_xi_csv(path: &Path, trace: &MetricTrace, config: &impl Serialize) -> Result<()> {
    let mut file = fs::File::create(path)?;
    write_provenance(&mut file, config)?;
    let mut w = csv::Writer::from_writer(file);
    for (i, &xi) in trace.xi.iter().enumerate() {
        w.serialize(XiRow {
            mu: trace.mu_start + i as i64,
            xi,
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the four trace files of a scenario into `dir`.
pub fn write_traces(dir: &Path, sc: &TraceScenario, set: &TraceSet) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let paths = [
        dir.join(format!("{}_timing_pn.csv", sc.name)),
        dir.join(format!("{}_timing_nopn.csv", sc.name)),
        dir.join(format!("{}_xi_plus5ghz.csv", sc.name)),
        dir.join(format!("{}_xi_minus5ghz.csv", sc.name)),
    ];
    write_timing_csv(&paths[0], &set.with_pn, sc)?;
    write_timing_csv(&paths[1], &set.without_pn, sc)?;
    write_xi_csv(&paths[2], &set.xi_pos, sc)?;
    write_xi_csv(&paths[3], &set.xi_neg, sc)?;
    Ok(paths.to_vec())
}
