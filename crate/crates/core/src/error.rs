use crate::linsolve::SolveStats;
use thiserror::Error;

pub type Result<T, E = OcpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum OcpError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,

    #[error("composite Simpson weights need an even number of subintervals, got n = {0}")]
    SimpsonParity(usize),

    #[error("regularization parameter must be non-negative, got {0}")]
    NegativeGamma(f64),

    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),

    #[error("non-finite value {value} sampled at ({x}, {y})")]
    NonFiniteSample { x: f64, y: f64, value: f64 },

    #[error("problem `{0}` has no closed-form exact solution")]
    NoExactSolution(String),

    #[error("operator has no constant stencil; boundary data cannot be applied")]
    NoStencil,

    #[error("fast diagonalization needs every block to be diagonal in the sine basis")]
    NotDiagonalizable,

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("dense path limited to n <= {limit}, got n = {n}")]
    DenseLimit { n: usize, limit: usize },

    #[error("{0}")]
    Precondition(String),

    #[error("linear solve failed: {reason} (iterations: {}, relative residual: {:.3e})", stats.iterations, stats.final_relative_residual)]
    Solver { reason: String, stats: SolveStats },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl OcpError {
    /// Errors caused by invalid input rather than numerical failure.
    pub fn is_precondition(&self) -> bool {
        !matches!(self, OcpError::Solver { .. } | OcpError::Io(_))
    }
}
