use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pdm_sync::channel::apply_timing_pad;
use pdm_sync::dsp::RngStream;
use pdm_sync::framer::{random_frame, FrameConfig};
use pdm_sync::harness::{self, CampaignSpec, TraceScenario};
use pdm_sync::interchange;
use pdm_sync::seqgen::{golay_double, golay_seed_26, to_qpsk, training_pair};
use pdm_sync::sync::{synchronize, SyncConfig};
use pdm_sync::{Error, Result};

/// Frame and carrier synchronization toolkit for dual-polarization
/// coherent optical OFDM.
#[derive(Parser)]
#[command(name = "pdmsync", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte-Carlo campaigns and metric traces.
    Sim {
        #[command(subcommand)]
        cmd: SimCmd,
    },
    /// Training sequences.
    Seq {
        #[command(subcommand)]
        cmd: SeqCmd,
    },
    /// Transmit frames.
    Frame {
        #[command(subcommand)]
        cmd: FrameCmd,
    },
    /// Run the estimator on a stored signal.
    Sync {
        #[command(subcommand)]
        cmd: SyncCmd,
    },
}

#[derive(Subcommand)]
enum SimCmd {
    /// Run a campaign from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides trials_per_point.
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides threads.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write timing and Xi traces for a named scenario.
    Trace {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    Seed,
    Qpsk,
    Qam16,
}

#[derive(Subcommand)]
enum SeqCmd {
    /// Write a Golay pair as CSV.
    Dump {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "qam16")]
        stage: Stage,
    },
}

#[derive(Subcommand)]
enum FrameCmd {
    /// Write a random frame in the binary signal format.
    Dump {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        data_symbols: usize,
        /// Leave the first training symbol unweighted.
        #[arg(long)]
        no_pn: bool,
        /// Zero samples placed before the frame.
        #[arg(long, default_value_t = 100)]
        pad: usize,
    },
}

#[derive(Subcommand)]
enum SyncCmd {
    /// Write M_x, M_y and Xi for a stored signal.
    Trace {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        beta: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Sim { cmd: SimCmd::Run { config, out, trials, seed, threads } } => {
            let mut spec = CampaignSpec::load(&config)?;
            if let Some(t) = trials {
                spec.trials_per_point = t;
            }
            if let Some(s) = seed {
                spec.master_seed = s;
            }
            if let Some(t) = threads {
                spec.threads = t;
            }
            spec.validate()?;
            let result = harness::run_campaign(&spec)?;
            let (summary, trials) = harness::write_campaign(&out, &result)?;
            for p in &result.summary.points {
                println!(
                    "{:?}={} error_rate={} cfo_err_max_hz={:.4e}",
                    spec.sweep.variable, p.value, p.sync_error_rate, p.cfo_err_max_hz
                );
            }
            println!("{}\n{}", summary.display(), trials.display());
        }
        Cmd::Sim { cmd: SimCmd::Trace { scenario, out } } => {
            let sc = TraceScenario::by_name(&scenario)?;
            let set = harness::emit_traces(&sc)?;
            for p in harness::write_traces(&out, &sc, &set)? {
                println!("{}", p.display());
            }
        }
        Cmd::Seq { cmd: SeqCmd::Dump { out, stage } } => {
            let pair = match stage {
                Stage::Seed => golay_seed_26(),
                Stage::Qpsk => {
                    let mut q = to_qpsk(&golay_seed_26())?;
                    for _ in 0..4 {
                        q = golay_double(&q)?;
                    }
                    q
                }
                Stage::Qam16 => training_pair()?,
            };
            interchange::write_pair_csv(&out, &pair)?;
            println!("{}", out.display());
        }
        Cmd::Frame { cmd: FrameCmd::Dump { out, seed, data_symbols, no_pn, pad } } => {
            let cfg = FrameConfig {
                n_data_symbols: data_symbols,
                use_pn: !no_pn,
                ..FrameConfig::default()
            };
            let (sig, label) = random_frame(&training_pair()?, &cfg, &mut RngStream::new(seed, "frame"))?;
            let sig = apply_timing_pad(&sig, pad);
            interchange::write_signal(&out, &sig, &cfg, Some(&label))?;
            println!("{}", out.display());
        }
        Cmd::Sync { cmd: SyncCmd::Trace { input, out, beta } } => {
            let (sig, header) = interchange::read_signal(&input)?;
            let mut cfg = SyncConfig::new(header.frame_cfg.clone(), training_pair()?, beta, 0..0)?;
            cfg.search_window = cfg.full_window(sig.len());
            if cfg.search_window.is_empty() {
                return Err(Error::Window(format!("signal of {} samples is too short", sig.len())));
            }
            let (est, trace) = synchronize(&sig, &cfg)?;
            std::fs::create_dir_all(&out)?;
            harness::write_timing_csv(&out.join("timing.csv"), &trace, &header)?;
            harness::write_xi_csv(&out.join("xi.csv"), &trace, &header)?;
            println!(
                "d_hat_x={} d_hat_y={} alpha_hat={} nu_hat_hz={}",
                est.d_hat_x, est.d_hat_y, est.alpha_hat, est.nu_hat_hz
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pdmsync: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
