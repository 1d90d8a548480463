use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("map dimensions {width}x{height} are too small (minimum is 4x4)")]
    DimensionTooSmall { width: usize, height: usize },

    #[error("obstacle density {0} is outside [0, 1)")]
    InvalidDensity(f64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dataset mixes local window sizes K={first} and K={other}")]
    MixedK { first: u32, other: u32 },

    #[error("dataset mixes domains {first} and {other}")]
    MixedDomain { first: String, other: String },

    #[error("model expects {expected} input features but got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid model file: {0}")]
    ModelFormat(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
