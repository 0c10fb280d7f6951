//! `hdemg`: reproducible HD-sEMG pose-estimation experiments from the command line.

mod cmd;
mod common;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hdemg::dataio::GridSelection;
use hdemg::{Error, ErrorKind};

#[derive(Parser)]
#[command(name = "hdemg", version, about = "HD-sEMG hand pose estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// JSON config; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic recording (EMG, markers, angles, schedule).
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration_s: Option<f64>,
        #[arg(long)]
        channels: Option<usize>,
        #[arg(long)]
        noise_std: Option<f64>,
    },
    /// Envelope extraction and alignment of EMG with joint angles.
    Preprocess {
        #[command(flatten)]
        common: Common,
        /// Directory holding emg.bin, angles.csv, markers.csv and schedule.json.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        slide: Option<usize>,
        /// Electrode subset: 32x2, 16x4, 16x2, 32x1-proximal or 32x1-distal.
        #[arg(long)]
        grid: Option<GridSelection>,
        /// Channel statistics from a training recording (channel_stats.json).
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long)]
        skeleton: Option<PathBuf>,
    },
    /// Proximo-distal versus circumferential normalized dimensional variance.
    Variance {
        #[command(flatten)]
        common: Common,
        /// Raw EMG recordings (binary with JSON sidecar); repeat per session.
        #[arg(long, required = true)]
        emg: Vec<PathBuf>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        slide: Option<usize>,
    },
    /// Bode summaries, R-C fits, divider attenuation and recording comparison.
    Impedance {
        #[command(flatten)]
        common: Common,
        /// `name=path` of a measurement CSV; repeat per electrode type.
        #[arg(long = "input", value_parser = cmd::impedance::parse_named)]
        inputs: Vec<(String, PathBuf)>,
        /// Treat measurements as single-interface values instead of two-electrode series values.
        #[arg(long)]
        no_split: bool,
        /// Two raw EMG recordings to compare.
        #[arg(long, num_args = 2)]
        compare: Vec<PathBuf>,
        #[arg(long)]
        channel: Option<usize>,
    },
    /// Train the per-joint recursive estimator.
    Train {
        #[command(flatten)]
        common: Common,
        /// Aligned dataset directories, one per trial; the last is held out.
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        /// Hidden layer widths, comma separated.
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recursive inference on an aligned dataset.
    Infer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        postfilter: Option<cmd::model::PostFilter>,
    },
    /// Correlation and fingertip-distance metrics, with paired tests across subjects.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Aligned dataset directory or angle table with the true angles.
        #[arg(long)]
        actual: Option<PathBuf>,
        /// Angle table with the estimates.
        #[arg(long)]
        predicted: Option<PathBuf>,
        #[arg(long)]
        skeleton: Option<PathBuf>,
    },
    /// Statistical parametric mapping of estimation errors, cross-joint summaries.
    Spm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Convert delimited-text EMG exports using a user-supplied layout.
    Convert {
        /// Directory of .csv/.txt exports; defaults to the data cache directory.
        #[arg(long)]
        src: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Acquisition metadata JSON (grid, channel map, constants).
        #[arg(long)]
        meta: PathBuf,
        #[arg(long, default_value = ",")]
        delimiter: char,
    },
}

fn run(cli: Cli) -> hdemg::Result<()> {
    match cli.command {
        Command::Synth { common, seed, duration_s, channels, noise_std } => {
            cmd::data::synth(&common, seed, duration_s, channels, noise_std)
        }
        Command::Preprocess { common, data, window, slide, grid, stats, skeleton } => {
            cmd::data::preprocess(&common, &data, window, slide, grid, stats.as_deref(), skeleton.as_deref())
        }
        Command::Variance { common, emg, window, slide } => cmd::data::variance(&common, &emg, window, slide),
        Command::Impedance { common, inputs, no_split, compare, channel } => {
            cmd::impedance::run(&common, &inputs, no_split, &compare, channel)
        }
        Command::Train { common, data, epochs, learning_rate, batch_size, hidden, seed } => {
            cmd::model::train(&common, &data, epochs, learning_rate, batch_size, hidden, seed)
        }
        Command::Infer { common, model, data, postfilter } => cmd::model::infer(&common, &model, &data, postfilter),
        Command::Evaluate { common, actual, predicted, skeleton } => {
            cmd::eval::evaluate(&common, actual.as_deref(), predicted.as_deref(), skeleton.as_deref())
        }
        Command::Spm { common, alpha, nodes } => cmd::eval::spm(&common, alpha, nodes),
        Command::Convert { src, out, meta, delimiter } => cmd::data::convert(src.as_deref(), &out, &meta, delimiter),
    }
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": { "kind": kind, "message": message, "exit_code": code } });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            return report("config", msg.trim(), 2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            let name = match kind {
                ErrorKind::Config => "config",
                ErrorKind::Data => "data",
                ErrorKind::Numerical => "numerical",
            };
            report(name, &error_chain(&e), exit_code(kind))
        }
    }
}

fn error_chain(e: &Error) -> String {
    let mut s = e.to_string();
    let mut src = std::error::Error::source(e);
    while let Some(c) = src {
        s.push_str(": ");
        s.push_str(&c.to_string());
        src = c.source();
    }
    s
}
