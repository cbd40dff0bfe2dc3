use thiserror::Error;

/// Errors produced anywhere in the solver and discovery pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid multi-index: {0}")]
    InvalidMultiIndex(String),

    #[error("assembly: multi-index `{0}` is required but missing from the derivative set")]
    MissingDerivative(String),

    #[error("assembly: non-finite {what} at grid point {location:?}")]
    NonFinite { what: String, location: Vec<usize> },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("zero diagonal in row {row}")]
    ZeroDiagonal { row: usize },

    #[error("matrix is rank deficient: pivot {pivot:.3e} at column {column}")]
    RankDeficient { pivot: f64, column: usize },

    #[error("sparse product exceeds nnz budget ({nnz} > {budget})")]
    NnzBudget { nnz: usize, budget: usize },

    #[error("grid size {size} in dimension {dim} is not a power of two >= {min}; pad the grid")]
    NotPowerOfTwo { dim: usize, size: usize, min: usize },

    #[error("FGMRES breakdown: non-finite value at iteration {iteration}")]
    Breakdown { iteration: usize },

    #[error("FGMRES did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NotConverged {
        residual: f64,
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("expression domain violation: power input {value} at point {index}")]
    Domain { value: f64, index: usize },

    #[error("template: {0}")]
    Template(String),

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("generator: {0}")]
    Generator(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unsupported dataset version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("config: {0}")]
    Config(String),

    #[error("training failed at epoch {epoch}, batch {batch}: {source}")]
    Training {
        epoch: usize,
        batch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
