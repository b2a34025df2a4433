use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

mod config;
mod run;

use config::Config;
use run::{Outcome, Output};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad invocation or configuration. Nothing was computed.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

impl From<nonmarkov_core::Error> for CliError {
    fn from(e: nonmarkov_core::Error) -> Self {
        use nonmarkov_core::Error::*;
        match e {
            InvalidParameter(_) | Recurrence { .. } | Parse { .. } | DimensionMismatch { .. } | InvalidState(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Dephasing,
    GaussianSweep,
    Divisibility,
}

/// Non-Markovianity experiments driven by a flat key = value config file.
///
/// Exit status: 0 success, 1 usage or config error, 2 numeric failure,
/// 3 success with flagged windows.
#[derive(Debug, Parser)]
#[command(name = "nonmarkov", version)]
struct Args {
    command: Command,
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweep cells (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write a matplotlib script next to the tables.
    #[arg(long)]
    emit_plots: bool,
}

fn execute(args: &Args) -> Result<Outcome, CliError> {
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    let cfg = Config::load(&args.config)?;
    let out = Output::new(&args.out, args.emit_plots)?;
    match args.command {
        Command::Dephasing => run::dephasing(&cfg, &out),
        Command::GaussianSweep => run::gaussian_sweep(&cfg, &out),
        Command::Divisibility => run::divisibility(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&args) {
        Ok(Outcome { flagged: 0 }) => ExitCode::SUCCESS,
        Ok(Outcome { flagged }) => {
            eprintln!("warning: {flagged} flagged window(s); see summary.txt");
            ExitCode::from(3)
        }
        Err(e) => {
            let kind = if e.code() == 1 { "error" } else { "numeric failure" };
            eprintln!("{kind}: {e}");
            ExitCode::from(e.code())
        }
    }
}
