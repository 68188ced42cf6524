//! `qrc-lab`: runs linearity probes, reservoir benchmarks and the spectral
//! cross-check from JSON experiment configs.
//!
//! Exit codes: 0 success, 1 error, 2 indeterminate verdict, 3 generator
//! refused by the spectral oracle.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Format;
use qrc_core::QrcError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] QrcError),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(QrcError::IllConditionedEigenbasis { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "qrc-lab", version, about = "Quantum reservoir linearity experiments")]
struct Cli {
    /// Worker threads for the parallel parts of a run.
    #[arg(long, global = true, env = "QRC_LAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in encodings and their expected verdicts.
    Catalog {
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Probe an encoding and classify every node.
    Analyze(RunArgs),
    /// Run the memory or sine-estimation task of a config.
    Benchmark(RunArgs),
    /// Compare the spectral solution with time stepping at frozen input.
    Crosscheck(RunArgs),
}

#[derive(Args, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `probe.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `output.formats`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Catalog { format } => commands::catalog(*format),
        Command::Analyze(args) => commands::analyze(args),
        Command::Benchmark(args) => commands::benchmark(args),
        Command::Crosscheck(args) => commands::crosscheck(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
