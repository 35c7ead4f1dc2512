use thiserror::Error;

/// Errors raised by the simulator, the diagnostics and the probes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZakharovError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("grids differ: {0}")]
    GridMismatch(String),

    #[error("B^{sigma} is singular on the k=0 mode, which carries {magnitude:.3e}")]
    SingularMode { sigma: f64, magnitude: f64 },

    #[error("field is not mean-free (|mean coefficient| = {mean:.3e}, tolerance {tolerance:.3e}); Ĥ⁻¹ requires b = ∇·V")]
    NotMeanFree { mean: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported Sobolev order {0}: increment decomposition needs an even integer s >= 2")]
    UnsupportedOrder(f64),

    #[error("insufficient data: {needed} records past t_min required, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ZakharovError {
    fn from(e: std::io::Error) -> Self {
        ZakharovError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ZakharovError>;
