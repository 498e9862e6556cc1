use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("empty word: products over zero factors are not defined")]
    EmptyWord,

    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("invalid sign matrix: {0}")]
    InvalidSignMatrix(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid transition schedule: {0}")]
    InvalidSchedule(String),

    #[error("sign matrix is not irreducible")]
    NotIrreducible,

    /// The eigenvalue iteration hit its sweep cap. `partial` is the largest
    /// modulus among the eigenvalues that did converge.
    #[error("QR iteration did not converge after {iterations} sweeps (partial radius {partial})")]
    NoConvergence { iterations: usize, partial: f64 },

    #[error("stationary vector did not converge (residual {residual:e})")]
    StationaryNotConverged { residual: f64 },

    /// An enumeration or search hit its safety cap before finishing.
    #[error("enumeration cap of {cap} exceeded after {produced} items")]
    CapExceeded { cap: u64, produced: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input-file diagnostics; `path` is a JSON path such as `$.sign_matrix[0]`.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
