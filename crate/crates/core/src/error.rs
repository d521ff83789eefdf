use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("manifold needs at least one interval")]
    EmptyManifold,
    #[error("got {intervals} intervals but {metric} metric coefficients")]
    MetricLengthMismatch { intervals: usize, metric: usize },
    #[error("interval {index} is degenerate: a = {a} >= b = {b}")]
    DegenerateInterval { index: usize, a: f64, b: f64 },
    #[error("metric coefficient of interval {index} must be positive and finite, got {value}")]
    NonPositiveMetric { index: usize, value: f64 },
    #[error("resolution N = {n} too small: {reason}")]
    ResolutionTooSmall { n: usize, reason: String },
    #[error("matrix is not unitary: max |M^H M - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid endpoint pairing: {0}")]
    InvalidPairing(String),
    #[error("Robin angle {index} equals pi; its endpoint carries a Dirichlet condition")]
    AngleAtMinusPi { index: usize },
    #[error("angle {0} is not finite")]
    NonFiniteAngle(f64),
    #[error("boundary matrix is singular: 1 lies within {distance:e} of spec(U0); change N")]
    SingularBoundaryMatrix { distance: f64 },
    #[error("first-order perturbation bound is not positive ({bound:e})")]
    PerturbationTooLarge { bound: f64 },
    #[error("mass matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("root bracketing failed on branch {branch}")]
    RootBracketFailure { branch: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code of the command-line front-end for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::EmptyManifold
            | Error::MetricLengthMismatch { .. }
            | Error::DegenerateInterval { .. }
            | Error::NonPositiveMetric { .. }
            | Error::ResolutionTooSmall { .. }
            | Error::IndexOutOfRange { .. }
            | Error::Config(_)
            | Error::Io(_) => 2,
            Error::NotUnitary { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidPairing(_)
            | Error::AngleAtMinusPi { .. }
            | Error::NonFiniteAngle(_)
            | Error::SingularBoundaryMatrix { .. }
            | Error::PerturbationTooLarge { .. } => 3,
            Error::NotPositiveDefinite { .. }
            | Error::ConvergenceFailure { .. }
            | Error::RootBracketFailure { .. } => 4,
        }
    }
}
