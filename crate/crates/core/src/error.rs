use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty span: all vectors vanish")]
    EmptySpan,

    #[error("evaluation at pole {0}")]
    EvaluationAtPole(Complex64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("pole {0} lies on the real axis")]
    RealPole(Complex64),

    #[error("pole {0} coincides with an existing pole; use limit pole data instead")]
    CoincidentPole(Complex64),

    #[error("degenerate frame: {0}")]
    Degenerate(String),

    #[error("singular matrix")]
    Singular,

    #[error("limit extrapolation failed: {0}")]
    Extrapolation(String),

    #[error("non-simple pole structure: {0}")]
    NonSimplePole(String),

    #[error("peeling stalled: {0}")]
    PeelingStalled(String),

    #[error("projector field is not well defined: {0}")]
    BadProjector(String),

    #[error("Neumann series convergence not guaranteed: contraction constant {0:.6} exceeds bound")]
    NotSmall(f64),

    #[error("Neumann tail not contracting: {0}")]
    NotContracting(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("fit is not of Laurent form: {0}")]
    NonLaurent(String),

    #[error("schema error at line {line}, column {column}: {msg}")]
    Schema { line: usize, column: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
