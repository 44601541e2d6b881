//! Experiment harness behind the `linkspy` binary.

mod experiments;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::config::{parse_list, ExperimentConfig};
use crate::error::{Error, Result};

pub use experiments::{run_calibrate, run_covert, run_fingerprint, CovertReport, FingerprintReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Calibrate,
    CovertSendReceive,
    FingerprintGenerate,
    FingerprintEval,
}

/// Command line of the `linkspy` binary.
#[derive(Debug, Clone, Parser)]
#[command(name = "linkspy", version, about = "GPU interconnect congestion covert/side channel experiments")]
pub struct Args {
    #[arg(value_enum)]
    pub mode: Mode,
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Output directory; created if missing.
    #[arg(long = "out")]
    pub output_dir: PathBuf,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Text message to send over the covert channel.
    #[arg(long, conflicts_with = "bits")]
    pub message: Option<String>,
    /// Length of a random payload to send instead of a message.
    #[arg(long)]
    pub bits: Option<usize>,
    /// Comma-separated workload profile names.
    #[arg(long)]
    pub profiles: Option<String>,
    /// Decision threshold in cycles.
    #[arg(long)]
    pub threshold: Option<f64>,
}

/// A fully resolved experiment: file values with command-line overrides applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn from_args(args: &Args) -> Result<Self> {
        let mut config = ExperimentConfig::load(&args.config)?;
        if let Some(runs) = args.runs {
            config.runs = runs;
        }
        if let Some(m) = &args.message {
            config.message = Some(m.clone());
            config.bits = None;
        }
        if let Some(b) = args.bits {
            config.bits = Some(b);
            config.message = None;
        }
        if let Some(p) = &args.profiles {
            config.profiles = parse_list(p);
        }
        if let Some(t) = args.threshold {
            config.threshold = Some(t);
        }
        Ok(Self {
            mode: args.mode,
            config,
            seed: args.seed,
            output_dir: args.output_dir.clone(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.config.runs == 0 {
            return Err(Error::config("runs", "must be at least 1"));
        }
        if self.mode == Mode::CovertSendReceive {
            match (&self.config.message, self.config.bits) {
                (None, None) => return Err(Error::config("message", "covert mode needs a message or a bit count")),
                (Some(_), Some(_)) => return Err(Error::config("bits", "give either a message or a bit count, not both")),
                _ => {}
            }
            let c = &self.config;
            let payload_bits = c.message.as_ref().map_or(c.bits.unwrap_or(0), |m| 8 * m.len());
            if c.length_header && c.length_field_bits < 64 && payload_bits as u64 >= 1 << c.length_field_bits {
                return Err(Error::config(
                    "bits",
                    format!("{payload_bits} payload bits do not fit a {}-bit length field", c.length_field_bits),
                ));
            }
        }
        Ok(())
    }
}

/// Runs one experiment and returns the text of its `report.txt`.
pub fn run(spec: &ExperimentSpec) -> Result<String> {
    spec.validate()?;
    match spec.mode {
        Mode::Calibrate => run_calibrate(spec).map(|(_, report)| report),
        Mode::CovertSendReceive => run_covert(spec).map(|r| r.report),
        Mode::FingerprintGenerate | Mode::FingerprintEval => run_fingerprint(spec).map(|r| r.report),
    }
}
