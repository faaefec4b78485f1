use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("load error at line {line}: {message}")]
    Load { line: usize, message: String },

    #[error("encode error: {0}")]
    Encode(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("scheduler error: {0}")]
    Scheduler(String),

    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Divergence {
        epoch: usize,
        step: usize,
        loss: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Config(_) => "config",
            Error::Load { .. } => "load",
            Error::Encode(_) => "encode",
            Error::Numeric(_) => "numeric",
            Error::Evaluation(_) => "evaluation",
            Error::Analysis(_) => "analysis",
            Error::Metric(_) => "metric",
            Error::Scheduler(_) => "scheduler",
            Error::Divergence { .. } => "divergence",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
