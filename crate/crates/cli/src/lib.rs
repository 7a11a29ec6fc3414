//! Batch front end: read a group/action/module document, run constructions
//! and verification suites, and render deterministic reports.

pub mod commands;
pub mod input;
pub mod report;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{cmd_fusion, cmd_inertia, cmd_simples, cmd_verify};
pub use report::{Format, Report};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{0}")]
    Computation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Read { .. } => EXIT_INPUT,
            CliError::Write { .. } | CliError::Computation(_) => EXIT_FAIL,
        }
    }
}

impl From<orbifold_double::Error> for CliError {
    fn from(e: orbifold_double::Error) -> Self {
        match e {
            orbifold_double::Error::SplittingFailed(n) => CliError::Computation(format!(
                "randomized splitting of a representation failed after {n} attempts; rerun with another --seed"
            )),
            other => CliError::Computation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Inertia,
    Simples,
    Verify,
    Fusion,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Inertia => "inertia",
            Command::Simples => "simples",
            Command::Verify => "verify",
            Command::Fusion => "fusion",
        }
    }
}

#[derive(Debug, Clone)]
pub struct JobConfig {
    pub input: PathBuf,
    pub command: Command,
    pub prime: Option<u64>,
    pub seed: u64,
    pub trials: usize,
    pub budget_bits: u32,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl JobConfig {
    pub fn new(input: impl Into<PathBuf>, command: Command) -> Self {
        JobConfig {
            input: input.into(),
            command,
            prime: None,
            seed: 0,
            trials: 16,
            budget_bits: 40,
            output: None,
            format: Format::Json,
        }
    }
}

/// Rendered report and exit code.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub rendered: String,
    pub exit_code: i32,
}

/// Runs a job from text already in memory.
pub fn run_on_text(text: &str, config: &JobConfig) -> Result<Outcome, CliError> {
    let doc = input::parse(text)?;
    let problem = input::build(&doc, config.prime)?;
    let report = match config.command {
        Command::Inertia => cmd_inertia(&problem, config)?,
        Command::Simples => cmd_simples(&problem, config)?,
        Command::Verify => cmd_verify(&problem, config)?,
        Command::Fusion => cmd_fusion(&problem, config)?,
    };
    let exit_code = if report.passed() { EXIT_PASS } else { EXIT_FAIL };
    Ok(Outcome { rendered: report.render(config.format), exit_code })
}

/// Reads the input, runs the job and writes the report to the output path
/// when one is given.
pub fn run(config: &JobConfig) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(&config.input)
        .map_err(|source| CliError::Read { path: config.input.display().to_string(), source })?;
    let outcome = run_on_text(&text, config)?;
    if let Some(path) = &config.output {
        std::fs::write(path, &outcome.rendered)
            .map_err(|source| CliError::Write { path: path.display().to_string(), source })?;
    }
    Ok(outcome)
}
