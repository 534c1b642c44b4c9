use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point index {index} out of range for space with {n_points} points")]
    Index { index: usize, n_points: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("invalid group spec: {0}")]
    Spec(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
