use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("resource guard: {what} needs {required}, cap is {cap}")]
    ResourceGuard {
        what: &'static str,
        required: f64,
        cap: f64,
    },
    #[error("no convergence in {what}: {detail}")]
    NoConvergence { what: &'static str, detail: String },
    #[error("config error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
