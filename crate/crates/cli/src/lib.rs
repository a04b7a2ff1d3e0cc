//! Command-line front end for `rbm-lyapunov`: configuration handling, the
//! subcommands, run manifests and the validation suite.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod validate;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("validation failed: {}", .0.join(", "))]
    Validation(Vec<String>),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 config, 3 numerical, 4 validation, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Validation(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl From<rbm_lyapunov::Error> for CliError {
    fn from(e: rbm_lyapunov::Error) -> Self {
        use rbm_lyapunov::Error as E;
        match e {
            E::Config(_) | E::InvalidCurve(_) | E::Domain(_) | E::Backend(_) | E::InfiniteArea => {
                Self::Config(e.to_string())
            }
            _ => Self::Numerical(e.to_string()),
        }
    }
}
