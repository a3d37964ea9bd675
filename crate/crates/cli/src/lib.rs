//! Command line front end: resolves flags and config files into a
//! [`RunConfig`], runs one command and reports through exit codes
//!
//! * 0: success
//! * 2: configuration error
//! * 3: numerical failure
//! * 4: partial results

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
pub use config::{Cli, Command, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] pauli_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use pauli_core::Error as E;
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Core(E::InvalidArgument(_) | E::UnknownField(_) | E::MissingParam { .. } | E::NoAnalyticPotential(_)) => {
                EXIT_CONFIG
            }
            Self::Core(_) => EXIT_NUMERICAL,
        }
    }
}

/// How a command ended after producing its output.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Success,
    Partial(String),
    NumericalFailure(String),
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub stdout: String,
    /// Names of the files written under `--out`.
    pub files: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Success => EXIT_OK,
            Status::Partial(_) => EXIT_PARTIAL,
            Status::NumericalFailure(_) => EXIT_NUMERICAL,
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Potential => commands::potential(cfg),
        Command::Rates => commands::rates(cfg),
        Command::Deform => commands::deform(cfg),
        Command::Morse => commands::morse(cfg),
    }
}

/// Resolves a full argument list (program name first) into a run configuration.
pub fn config_from_args<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    RunConfig::resolve(cli)
}

/// Parses `args`, runs the command, prints its output and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = RunConfig::resolve(cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(out) => {
            let _ = std::io::stdout().lock().write_all(out.stdout.as_bytes());
            match &out.status {
                Status::Success => {}
                Status::Partial(m) => eprintln!("partial result: {m}"),
                Status::NumericalFailure(m) => eprintln!("error: {m}"),
            }
            out.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
