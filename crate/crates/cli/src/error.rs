use std::io;

use tclb::sim::ScheduleError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] tclb::Error),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
}

impl CliError {
    /// 2 for bad invocations and inputs, 1 for everything that went wrong
    /// while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Read { .. } => 2,
            CliError::Library(e) => match e {
                tclb::Error::Precondition(_)
                | tclb::Error::Parse { .. }
                | tclb::Error::TooLarge { .. }
                | tclb::Error::Schedule(ScheduleError::Indivisible { .. }) => 2,
                _ => 1,
            },
            CliError::Write { .. } => 1,
        }
    }
}
