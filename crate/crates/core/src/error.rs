use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("flow map lost monotonicity at time level {time_level}")]
    MonotonicityLoss { time_level: usize },

    #[error("degenerate flow: time integral of the Jacobian vanished at node {node}")]
    DegenerateFlow { node: usize },

    #[error("banded factorization hit a non-positive pivot at row {pivot}")]
    SingularSystem { pivot: usize },

    #[error("Helmholtz factorization failed at row {pivot}")]
    FactorizationFailure { pivot: usize },

    #[error("normalized signal has non-positive mass {mass}")]
    ZeroMass { mass: f64 },

    #[error("mismatched geometry: {0}")]
    MismatchedGeometry(String),

    #[error("position ({x}, {z}) m lies outside the physical region")]
    OutsideDomain { x: f64, z: f64 },

    #[error("line search failed after {trials} trials")]
    LineSearchFailure { trials: usize },

    #[error("reference model is constant; PSNR is undefined")]
    DegenerateReference,

    #[error("malformed `{field}`: {reason}")]
    Format { field: String, reason: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
