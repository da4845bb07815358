use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{0}` must be positive")]
    NonPositiveParameter(&'static str),
    #[error("parameter `{0}` must be non-negative")]
    NegativeParameter(&'static str),
    #[error("parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("cutoff omega_max = {omega_max} must exceed Omega = {omega}")]
    CutoffBelowOmega { omega_max: f64, omega: f64 },
    #[error("operation requires Omega > 0")]
    OmegaZero,

    #[error("kinetic matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no sign change in secular branch {branch}")]
    RootNotBracketed { branch: usize },
    #[error("root refinement in branch {branch} stopped at relative width {width:e}")]
    ToleranceNotReached { branch: usize, width: f64 },
    #[error("|omega_n^2 - omega_q^2| vanishes for n = {n}, q = {q}")]
    ResonantDenominator { n: usize, q: usize },
    #[error("position z = {z} lies outside [-L/2, L/2]")]
    PositionOutOfRange { z: f64 },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    QuadratureNotConverged { estimate: f64, error: f64 },
    #[error("eta/(m Omega) = {ratio} exceeds the weak-coupling gate {limit}")]
    OutsideWeakCoupling { ratio: f64, limit: f64 },
    #[error("invalid occupation: {0}")]
    InvalidOccupation(String),

    #[error("mode frequency must be positive")]
    ZeroFrequency,
    #[error("mode sum truncation not converged: tail {tail:e} vs sum {sum:e}")]
    TruncationNotConverged { sum: f64, tail: f64 },
    #[error("fit window holds {points} grid points, need at least {needed}")]
    WindowTooNarrow { points: usize, needed: usize },

    #[error("CFL number {cfl} exceeds 1")]
    CflViolation { cfl: f64 },
    #[error("eta = {eta} is not below 2 m Omega = {limit}")]
    OverdampedRegime { eta: f64, limit: f64 },
    #[error("t_max = {t_max} reaches the reflection time {limit}")]
    ReflectionContamination { t_max: f64, limit: f64 },
    #[error("history does not cover the requested samples: {0}")]
    InsufficientHistory(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("I/O: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
