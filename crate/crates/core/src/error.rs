use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed potential spec: {0}")]
    MalformedSpec(String),

    #[error("non-finite value for `{0}`")]
    NonFinite(String),

    #[error("tabulated grid is not strictly increasing at index {0}")]
    NotMonotone(usize),

    #[error("energy {energy} is not above the scattering threshold {threshold}")]
    BelowThreshold { energy: f64, threshold: f64 },

    #[error("invalid integration interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("adaptive quadrature did not converge: value {value}, error estimate {error}")]
    Convergence { value: f64, error: f64 },

    #[error("no sign change in bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("ODE step size underflow at x = {0}")]
    StepUnderflow(f64),

    #[error("free function must be strictly positive; got {value} at x = {x}")]
    NonPositive { x: f64, value: f64 },

    #[error("undeclared discontinuity near x = {0}; declare it as a jump point")]
    UndeclaredDiscontinuity(f64),

    #[error("empty feasible bracket: {0}")]
    EmptyBracket(String),

    #[error("no feasible point found within the evaluation budget")]
    NoFeasiblePoint,

    #[error("transmission probability {0} outside (0, 1]")]
    TransmissionOutOfRange(f64),

    #[error("zero transmission corresponds to unbounded particle production")]
    InfiniteProduction,

    #[error("negative integral value {0}")]
    NegativeTheta(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
