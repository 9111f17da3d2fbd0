//! `qecfabric` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qecfabric::capacity::CapacityError;
use qecfabric::pipeline::PipelineError;
use thiserror::Error;

use crate::config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) | PipelineError::Link(_) | PipelineError::Code(_) => CliError::Config(e.to_string()),
            PipelineError::Capacity { .. } => CliError::Capacity(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<CapacityError> for CliError {
    fn from(e: CapacityError) -> Self {
        match e {
            CapacityError::Unreachable { .. } => CliError::Capacity(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qecfabric", version, about = "Latency, LER and capacity studies of a tree-structured QEC control fabric")]
struct Cli {
    #[command(flatten)]
    common: Common,
    /// Print the default configuration with the origin of each value, then exit.
    #[arg(long, global = true)]
    show_defaults: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

/// Options that override the config file.
#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// TOML experiment config; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    shots: Option<u64>,
    #[arg(long, global = true)]
    distance: Option<u32>,
    /// Root-board profile: vcu129 or zcu216.
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Remove every stage jitter.
    #[arg(long, global = true)]
    zero_jitter: bool,
    /// Worker threads; 1 runs the sequential reference path, 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for CSV and JSON reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Latency campaign over the full decode-and-feedback loop.
    Latency {
        /// Also write the event trace of shot 0.
        #[arg(long)]
        trace: bool,
    },
    /// Logical error rate per distance with 95% Wilson intervals.
    Ler {
        /// Comma-separated distances; defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        distances: Option<Vec<u32>>,
        /// Physical error rate.
        #[arg(long)]
        p: Option<f64>,
    },
    /// Qubit capacity and feasibility per distance.
    Capacity {
        #[command(flatten)]
        range: Range,
    },
    /// Predicted end-to-end latency per distance.
    Extrapolate {
        #[command(flatten)]
        range: Range,
    },
    /// Link, decoder and requirement bandwidths.
    Throughput,
    /// Quick end-to-end checks of the reference figures.
    Selftest,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Range {
    #[arg(long)]
    d_min: Option<u32>,
    #[arg(long)]
    d_max: Option<u32>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.shots {
            cfg.shots = v;
        }
        if let Some(v) = self.distance {
            cfg.distance = v;
            if self.config.is_none() {
                cfg.rounds = None;
            }
        }
        if let Some(v) = &self.profile {
            cfg.profile = v.clone();
        }
        if self.zero_jitter {
            cfg.stages = cfg.stages.zero_jitter();
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.show_defaults {
        print!("{}", config::show_defaults());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config("no subcommand given; see --help".into()));
    };
    let cfg = cli.common.resolve()?;
    match command {
        Command::Latency { trace } => commands::latency(&cfg, trace),
        Command::Ler { distances, p } => commands::ler(&cfg, distances, p),
        Command::Capacity { range } => commands::table(&cfg, range, "capacity"),
        Command::Extrapolate { range } => commands::table(&cfg, range, "extrapolate"),
        Command::Throughput => commands::throughput(&cfg),
        Command::Selftest => commands::selftest(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qecfabric: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
