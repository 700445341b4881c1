use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("rank deficient input: column {column} is linearly dependent on its predecessors")]
    RankDeficient { column: usize },

    #[error("vector leaves the covariance range (residual {residual:.3e}, norm {norm:.3e})")]
    OutOfRange { residual: f64, norm: f64 },

    #[error("ill-posed projection: W^T A V is singular or too ill-conditioned (cond {cond:.3e})")]
    IllPosedProjection { cond: f64 },

    #[error("ill-posed conditioning: S^T A Sigma0 A^T S is singular")]
    IllPosedConditioning,

    #[error("Krylov breakdown after {0} basis vectors")]
    BreakdownAt(usize),

    #[error("matrix is not positive definite (curvature {curvature:.3e} at iteration {iteration})")]
    NotSpd { iteration: usize, curvature: f64 },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("grid mismatch between density estimates")]
    GridMismatch,

    #[error("improper scale posterior (alpha = {alpha}, beta = {beta})")]
    ImproperPosterior { alpha: f64, beta: f64 },

    #[error("posterior scale mean undefined for alpha = {0} <= 1")]
    UndefinedMean(f64),

    #[error("CG trace too short: needed {needed} iterations, have {available}")]
    TraceTooShort { needed: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("observation {index}: {source}")]
    Observation {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("too many breakdowns: {breakdowns} of {total} solves")]
    TooManyBreakdowns { breakdowns: usize, total: usize },

    #[error("Matrix Market parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
