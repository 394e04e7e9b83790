//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.3e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix is not unitary: ‖U†U − I‖_F = {defect:.3e}")]
    NotUnitary { defect: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid spin network: {0}")]
    InvalidNetwork(String),

    #[error("network too large: {n} sites exceeds the dense-construction cap {cap}")]
    NetworkTooLarge { n: usize, cap: usize },

    #[error(
        "register cap exceeded: {n} system qubits + {l} rounds × {c} controlled \
         qubits = {total} > {cap}"
    )]
    RegisterCapExceeded {
        n: usize,
        l: usize,
        c: usize,
        total: usize,
        cap: usize,
    },

    #[error("channel is not ergodic with a pure fixed point: {0}")]
    NotErgodic(String),

    #[error(
        "minimum basis overlap η₀ = {eta0:.6} is below 0.5; the decoder would be \
         dominated by the residual component. Increase L (suggested L ≥ {suggested_l})"
    )]
    EtaTooSmall { eta0: f64, suggested_l: usize },

    #[error("controller factor deviates from |0⟩_C by {deviation:.3e}; layout or ordering bug")]
    ControllerNotReset { deviation: f64 },

    #[error("convergence fit refused: {0}")]
    FitRefused(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("linear algebra backend error: {0}")]
    Backend(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Config(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}
