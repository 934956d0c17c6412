use thiserror::Error;

/// Errors raised by the inference library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("NotPositiveDefinite: {0} is not positive definite")]
    NotPositiveDefinite(String),
    #[error("BadPeriods: {0}")]
    BadPeriods(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("SingularPrior: pre-period block of the prior covariance is not positive definite")]
    SingularPrior,
    #[error("SingularPosteriorPrecision: posterior precision is not positive definite")]
    SingularPosteriorPrecision,
    #[error("SingularCovariance: {0}")]
    SingularCovariance(String),
    #[error("NotPositiveSemidefinite: {0} has a negative eigenvalue")]
    NotPositiveSemidefinite(String),
    #[error("BadLevel: credible level {0} must lie strictly between 0 and 1")]
    BadLevel(f64),
    #[error("NegativeVariance: {0}")]
    NegativeVariance(String),
    #[error("BadRho: AR(1) coefficient {0} must satisfy |rho| < 1")]
    BadRho(f64),
    #[error("TooFewPeriods: need at least {needed} pre-periods, got {got}")]
    TooFewPeriods { needed: usize, got: usize },
    #[error("SingularOmega: marginal covariance of the increments is not positive definite at sigma2 = {0}")]
    SingularOmega(f64),
    #[error("EmptyGrid: hyper-prior grid has no points")]
    EmptyGrid,
    #[error("invalid hyper-prior grid: {0}")]
    InvalidGrid(String),
    #[error("AllWeightsUnderflow: every grid point has zero likelihood")]
    AllWeightsUnderflow,
    #[error("DimensionTooLarge: quadrature dimension {dim} exceeds the cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("GridTooCoarse: estimated discretization error {estimate:.3e} exceeds {target:.1e}")]
    GridTooCoarse { estimate: f64, target: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("replication {index} failed: {source}")]
    Replication {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The inputs were read but describe an invalid or degenerate problem.
    Validation,
    /// Numerical or internal failure.
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Replication { source, .. } => source.class(),
            Error::AllWeightsUnderflow
            | Error::GridTooCoarse { .. }
            | Error::DimensionTooLarge { .. } => ErrorClass::Internal,
            _ => ErrorClass::Validation,
        }
    }
}
