use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error(transparent)]
    Model(#[from] stot_nts::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// 1 for bad inputs, 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        use stot_nts::Error as E;
        match self {
            CliError::Input(_) | CliError::Io { .. } => 1,
            CliError::Model(e) => match e {
                E::MgfDivergence { .. }
                | E::QuadratureFailure { .. }
                | E::NonConvergence { .. }
                | E::Degenerate(_)
                | E::CurveRejected(_) => 2,
                _ => 1,
            },
        }
    }
}

pub fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}
