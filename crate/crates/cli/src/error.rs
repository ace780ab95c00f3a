use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] edgeroles::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },

    #[error("invalid arguments: {0}")]
    Usage(String),

    #[error("label count mismatch: {what} has {got} labels for {expected} items")]
    LabelCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// Tag printed in the `error` line on stderr.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Input { .. } => "input",
            CliError::Usage(_) => "usage",
            CliError::LabelCount { .. } => "labels",
            CliError::Json(_) => "json",
            CliError::Pool(_) => "threads",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
