use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{path}: {message}")]
    Load { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("numeric failure{}: {message}", layer.map(|l| format!(" at layer {l}")).unwrap_or_default())]
    Numeric {
        layer: Option<usize>,
        message: String,
    },

    #[error("training diverged at iteration {iteration} (objective trace: {trace:?})")]
    Divergence { iteration: usize, trace: Vec<f64> },

    #[error("selection failed: {0}")]
    Selection(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numeric(layer: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Numeric {
            layer,
            message: msg.into(),
        }
    }
}
