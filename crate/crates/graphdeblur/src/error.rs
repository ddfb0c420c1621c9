use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the deblurring pipeline.
///
/// Configuration problems (wrong sizes, invalid parameters) are reported
/// before any expensive compute starts; numeric-integrity variants signal
/// that an internal consistency check failed mid-computation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inconsistent dimensions or invalid parameter values.
    #[error("configuration error: {0}")]
    Config(String),

    /// An internal numeric consistency check failed (e.g. a spectrum that
    /// should be conjugate-symmetric produced a large imaginary residue).
    #[error("numeric integrity error: {0}")]
    Numeric(String),

    /// A spectral filter denominator vanished at the named 2-D frequency.
    #[error("singular filter: zero denominator at frequency ({k1}, {k2})")]
    SingularFilter { k1: usize, k2: usize },

    /// The GCV trace term collapsed to machine scale, so G(mu) is 0/0.
    #[error("degenerate GCV: {0}")]
    DegenerateGcv(String),

    /// The adjacency matrix has no usable weight mass.
    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),

    /// An ADMM iterate became non-finite or grew past the divergence guard.
    #[error("solver diverged at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },

    /// A quality metric is undefined for the given reference image.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// A file could not be parsed in the expected format.
    #[error("format error in {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    /// An I/O failure, annotated with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            detail: detail.into(),
        }
    }
}
