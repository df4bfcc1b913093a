use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV at line {line}: {msg}")]
    MalformedCsv { line: usize, msg: String },

    #[error("malformed input at line {line} of `{path}`: {msg}")]
    MalformedInput { path: String, line: usize, msg: String },

    #[error("backend `{backend}` is unavailable at size {size} (cap {cap})")]
    BackendUnavailableAtSize {
        backend: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("{source}; {hint}")]
    Hinted {
        #[source]
        source: bandgp::Error,
        hint: &'static str,
    },

    #[error(transparent)]
    Core(#[from] bandgp::Error),

    #[error("cannot write output: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, CliError>;
