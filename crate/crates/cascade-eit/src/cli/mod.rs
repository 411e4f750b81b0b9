//! Command-line front end: configuration parsing, dispatch to the solvers,
//! and CSV/manifest/report writing.

pub mod config;
pub mod runner;

use std::fmt;

pub use config::{parse_config, GridSpec, Mode, RunConfig, SweepSpec, TransitionName};
pub use runner::{run, CliOptions, Manifest, RunOutcome};

/// Failure classes map one-to-one onto process exit codes so scripts can
/// tell a bad config from a solver breakdown from a filesystem problem.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(crate::error::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Solver(err) => write!(f, "solver error: {err}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<crate::error::Error> for CliError {
    fn from(err: crate::error::Error) -> Self {
        CliError::Solver(err)
    }
}
