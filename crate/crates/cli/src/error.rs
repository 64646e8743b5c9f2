use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, detected before any computation.
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error(transparent)]
    Compute(#[from] robinspec_core::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Compute(_) | CliError::Io { .. } => 3,
        }
    }

    /// Variant name of the underlying error, for `result.json`.
    pub fn kind(&self) -> String {
        match self {
            CliError::Validation(_) => "Validation".into(),
            CliError::Io { .. } => "Io".into(),
            CliError::Compute(e) => {
                let debug = format!("{e:?}");
                debug
                    .split(|c: char| !c.is_alphanumeric())
                    .next()
                    .unwrap_or("Error")
                    .to_string()
            }
        }
    }
}
