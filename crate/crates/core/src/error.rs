use thiserror::Error;

/// Errors produced by the tensor kernels, the models and the data pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of bounds in mode {mode}: {index} is not in 1..={extent}")]
    Bounds {
        mode: usize,
        index: usize,
        extent: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("non-finite objective {value} at sweep {sweep}, block {block}")]
    NonFinite {
        sweep: usize,
        block: String,
        value: f64,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
