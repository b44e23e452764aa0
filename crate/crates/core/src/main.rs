use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ppgsleep::commands::{cmd_device, cmd_eval, cmd_run, cmd_server, cmd_synth, for_each_input};
use ppgsleep::config::{Channel, Config};
use ppgsleep::synth::{Burst, NightSpec, RsaSchedule};
use ppgsleep::Result;

#[derive(Parser)]
#[command(
    name = "ppgsleep",
    version,
    about = "Heart and breathing rate from wrist PPG during sleep"
)]
struct Cli {
    /// Key-value config file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for synthetic data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// PPG channel used for beat detection.
    #[arg(long, global = true)]
    channel: Option<ChannelArg>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Green,
    Ir,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// Constant respiration, no motion.
    Clean,
    /// Respiration rate steps to `--br-step` halfway through.
    RsaStep,
    /// 20 s motion bursts every 10 minutes.
    Motion,
}

#[derive(Subcommand)]
enum Cmd {
    /// Raw recording CSV -> feature file (.ftr).
    Device { inputs: Vec<PathBuf> },
    /// Feature file -> heart/breathing rate CSV and interval CSV.
    Server { inputs: Vec<PathBuf> },
    /// Device and server stages.
    Run { inputs: Vec<PathBuf> },
    /// Compare server outputs with references, per recording stem.
    Eval {
        stems: Vec<PathBuf>,
        /// Directory holding the reference CSVs; defaults to each stem's directory.
        #[arg(long)]
        ref_dir: Option<PathBuf>,
    },
    /// Write a synthetic recording with references.
    Synth {
        #[arg(long, value_enum, default_value_t = Kind::Clean)]
        kind: Kind,
        #[arg(long, default_value = "synth")]
        name: String,
        #[arg(long, default_value_t = 3600.0)]
        duration: f64,
        #[arg(long, default_value_t = 60.0)]
        hr: f64,
        /// Breaths per minute.
        #[arg(long, default_value_t = 15.0)]
        br: f64,
        #[arg(long, default_value_t = 20.0)]
        br_step: f64,
        #[arg(long, default_value_t = 0.05)]
        depth: f64,
        /// PPG noise standard deviation relative to pulse amplitude.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.0)]
        jitter_ms: f64,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(ch) = cli.channel {
        cfg.channel = match ch {
            ChannelArg::Green => Channel::Green,
            ChannelArg::Ir => Channel::Ir,
        };
    }
    std::fs::create_dir_all(&cli.out_dir)?;
    let out = cli.out_dir.as_path();
    let printed: Vec<PathBuf> = match cli.cmd {
        Cmd::Device { inputs } => for_each_input(&inputs, |p| cmd_device(p, &cfg, out))?,
        Cmd::Server { inputs } => for_each_input(&inputs, |p| cmd_server(p, &cfg, out))?
            .into_iter()
            .flatten()
            .collect(),
        Cmd::Run { inputs } => for_each_input(&inputs, |p| cmd_run(p, &cfg, out))?
            .into_iter()
            .flatten()
            .collect(),
        Cmd::Eval { stems, ref_dir } => {
            let report = cmd_eval(&stems, ref_dir.as_deref(), &cfg, out)?;
            print!("{}", report.to_table());
            vec![out.join("report.json"), out.join("report.txt")]
        }
        Cmd::Synth {
            kind,
            name,
            duration,
            hr,
            br,
            br_step,
            depth,
            noise,
            jitter_ms,
        } => {
            let mut spec = NightSpec::clean(hr, br, duration);
            spec.beats.rsa_depth = depth;
            spec.beats.jitter_s = jitter_ms / 1000.0;
            spec.ppg.noise_std = noise * spec.ppg.amplitude;
            spec.ppg.fs = cfg.fs_hz;
            match kind {
                Kind::Clean => {}
                Kind::RsaStep => {
                    spec.beats.rsa = RsaSchedule::stepped(vec![
                        (0.0, br / 60.0),
                        (duration / 2.0, br_step / 60.0),
                    ])?;
                }
                Kind::Motion => {
                    spec.accel_noise = 0.005;
                    spec.bursts = (0..)
                        .map(|k| 300.0 + 600.0 * k as f64)
                        .take_while(|s| s + 20.0 <= duration)
                        .map(|start| Burst {
                            start,
                            end: start + 20.0,
                            amp: 0.5,
                        })
                        .collect();
                }
            }
            cmd_synth(&spec, cli.seed, &name, out)?
        }
    };
    for p in printed {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
