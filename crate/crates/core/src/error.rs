use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("non-entire construct in `{node}`: {msg}")]
    NonEntire { node: String, msg: String },
    #[error("unknown catalog entry `{0}`")]
    UnknownMap(String),
    #[error("point {0} lies outside the window")]
    OutOfWindow(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("chart rejected: {0}")]
    Chart(String),
    #[error("lamination: {0}")]
    Lamination(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("image: {0}")]
    Image(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
