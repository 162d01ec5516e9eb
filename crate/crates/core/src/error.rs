use std::path::PathBuf;

/// Errors raised anywhere in the workbench.
///
/// The variants are grouped so that the CLI can map them onto its exit codes:
/// configuration and usage problems, I/O and malformed artifacts, and numeric
/// faults during training.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {detail}")]
    Format { what: String, detail: String },

    #[error("shape mismatch in field `{field}`: {detail}")]
    Shape { field: String, detail: String },

    #[error("numeric fault: {0}")]
    Numeric(String),

    #[error("environment {env} failed at rollout step {t}: {source}")]
    Rollout {
        env: usize,
        t: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(what: impl Into<String>, detail: impl ToString) -> Self {
        Error::Format {
            what: what.into(),
            detail: detail.to_string(),
        }
    }

    pub fn shape(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Shape {
            field: field.into(),
            detail: detail.into(),
        }
    }

    /// True for faults that originate in floating-point arithmetic.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric(_) => true,
            Error::Rollout { source, .. } => source.is_numeric(),
            _ => false,
        }
    }

    /// True for configuration and usage errors.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Config(_) | Error::Usage(_) => true,
            Error::Rollout { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
