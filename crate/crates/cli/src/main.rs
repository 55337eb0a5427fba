//! `tacsim`: generate synthetic sensor data, calibrate, train, evaluate,
//! compare and benchmark regressors.

mod commands;
mod config;

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "tacsim", version, about = "Synthetic tactile-sensor regression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from an oracle config.
    GenData { oracle: PathBuf, out: PathBuf },
    /// Estimate the pose offset from light-touch probes in a dataset.
    Calibrate {
        data: PathBuf,
        layout: PathBuf,
        /// Probes are frames at the end of a contact with force below this.
        #[arg(long, default_value_t = 0.3)]
        force_max: f64,
        #[arg(long, default_value_t = tacsim::calibration::DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the recovered offset here as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one model per fold and save them under the output directory.
    Train { experiment: PathBuf },
    /// Train and score every fold; writes results.csv and summary.json.
    Evaluate { experiment: PathBuf },
    /// Corrected paired t-test of two results files (A − B, left-tailed).
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single-call latency of a saved model.
    Bench {
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Error of a temperature-input model with its temperature held fixed.
    SweepTemp {
        experiment: PathBuf,
        #[arg(long, default_value_t = 61)]
        points: usize,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error(transparent)]
    Core(#[from] tacsim::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use tacsim::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Config(_)) => 1,
            CliError::Core(E::Numerical(_)) => 3,
            _ => 2,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read(path).map_err(|e| io_error(path, e))?;
    serde_json::from_slice(&text).map_err(|e| match e.classify() {
        // Well-formed JSON with the wrong fields is a configuration mistake.
        serde_json::error::Category::Data => tacsim::Error::Config(format!("{}: {e}", path.display())).into(),
        _ => tacsim::Error::from(e).into(),
    })
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(tacsim::Error::from)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    if e.kind() == std::io::ErrorKind::NotFound {
        CliError::NotFound(path.to_path_buf())
    } else {
        tacsim::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    }
}

fn not_found(e: CliError) -> CliError {
    match e {
        CliError::Core(tacsim::Error::Io { path, source }) if source.kind() == std::io::ErrorKind::NotFound => {
            CliError::NotFound(path)
        }
        other => other,
    }
}

fn report(err: &CliError) {
    let color = std::env::var_os("NO_COLOR").is_none() && std::io::stderr().is_terminal();
    if color {
        eprintln!("\x1b[1;31merror:\x1b[0m {err}");
    } else {
        eprintln!("error: {err}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::GenData { oracle, out } => commands::gen_data(&oracle, &out),
        Command::Calibrate {
            data,
            layout,
            force_max,
            steps,
            seed,
            out,
        } => commands::calibrate(&data, &layout, force_max, steps, seed, out.as_deref()),
        Command::Train { experiment } => commands::train(&experiment),
        Command::Evaluate { experiment } => commands::evaluate(&experiment),
        Command::Compare { a, b, out } => commands::compare(&a, &b, out.as_deref()),
        Command::Bench { model, n, seed } => commands::bench(&model, n, seed),
        Command::SweepTemp { experiment, points } => commands::sweep_temp(&experiment, points),
    };
    match result.map_err(not_found) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.exit_code())
        }
    }
}
