//! Command-line driver: configuration, subcommands, and the run directory.

pub mod commands;
pub mod config;
pub mod plot;
pub mod rundir;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use cxgvar_core::experiments::Granularity;
use cxgvar_core::grammar::Stage;
use thiserror::Error;

pub use config::{Overrides, RunConfig};
pub use rundir::{RunDir, RunMeta};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing artifact {artifact}: run `cxgvar {step}` first")]
    Missing { artifact: String, step: &'static str },
    #[error("stale artifact {artifact}: {reason}; rerun `cxgvar {step}`")]
    Stale {
        artifact: String,
        reason: String,
        step: &'static str,
    },
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Missing { .. } | CliError::Stale { .. } => 3,
            CliError::Run(_) => 1,
        }
    }
}

macro_rules! run_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Run(e.to_string())
            }
        }
    )*};
}

run_error!(
    std::io::Error,
    serde_json::Error,
    cxgvar_core::corpus::CorpusError,
    cxgvar_core::geo::GeoError,
    cxgvar_core::embeddings::EmbeddingError,
    cxgvar_core::grammar::GrammarError,
    cxgvar_core::matcher::MatcherError,
    cxgvar_core::classifier::ClassifierError,
    cxgvar_core::experiments::ExperimentError
);

#[derive(Debug, Parser)]
#[command(
    name = "cxgvar",
    version,
    about = "Construction-grammar dialect variation experiments"
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "cxgvar.toml")]
    pub config: PathBuf,
    /// Output directory shared by all subcommands of one run.
    #[arg(long, global = true, default_value = "run")]
    pub run_dir: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// early or late; both stages when omitted.
    #[arg(long, global = true)]
    pub stage: Option<Stage>,
    /// region, country or local.
    #[arg(long, global = true)]
    pub granularity: Option<Granularity>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Cluster airports into dialect areas.
    Areas,
    /// Build lexically balanced samples per area.
    Sample,
    /// Match the grammar against every sample and persist the split.
    Features,
    /// Fit the classifier(s) for the chosen granularity and stage.
    Train,
    /// Score trained models on the held-out split.
    Evaluate,
    /// Retrain on each macro- and micro-cluster alone.
    NodeScan,
    /// Iteratively remove each class's strongest features.
    Unmask,
    /// Correlate node error patterns with the full grammar's.
    ErrorCorr,
    /// Render plots and their CSV twins.
    Report,
    /// Every step from `areas` to `report`.
    All,
    /// Write a small synthetic input set plus a config file.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Execute `cli` on a pool of `--threads` workers, passing each summary line
/// to `emit`.
pub fn run(cli: &Cli, emit: &mut (dyn FnMut(&str) + Send)) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    pool.install(|| commands::execute(cli, emit))
}

/// Entry point shared by the binary and tests: returns the exit code and
/// prints summaries to stdout and errors to stderr.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli, &mut |line| println!("{line}")) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
