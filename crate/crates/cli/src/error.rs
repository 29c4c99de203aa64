use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const GUARD: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {key}: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Model(#[from] haps_ris::Error),

    #[error("non-finite {metric} at {context}")]
    NonFinite {
        metric: &'static str,
        context: String,
    },

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => exit::CONFIG,
            CliError::Model(e) => model_exit_code(e),
            CliError::NonFinite { .. } => exit::NUMERICAL,
            CliError::Io { .. } => exit::IO,
        }
    }
}

fn model_exit_code(e: &haps_ris::Error) -> i32 {
    use haps_ris::Error as E;
    match e {
        E::Element { source, .. } => model_exit_code(source),
        E::OracleGuard { .. } => exit::GUARD,
        E::WrapInWindow { .. } | E::DegenerateDistance { .. } => exit::NUMERICAL,
        _ => exit::CONFIG,
    }
}
