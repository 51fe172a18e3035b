use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("profile syntax error at position {position}: {message}")]
    ProfileSyntax { position: usize, message: String },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("coordinate {coordinate} is unbounded; a truncation radius is required")]
    TruncationRequired { coordinate: usize },

    #[error("degenerate domain: {accepted} of {proposals} proposals accepted")]
    DegenerateSampling { accepted: u64, proposals: u64 },

    #[error("torus parameter {index} has modulus {modulus}, expected 1")]
    OffTorus { index: usize, modulus: f64 },

    #[error("invalid torus action: {0}")]
    InvalidAction(String),

    #[error("monomial {monomial} is not square integrable: {reason}")]
    NotIntegrable { monomial: String, reason: String },

    #[error("quadrature did not reach tolerance: value {value}, error estimate {error}")]
    QuadratureNotConverged { value: f64, error: f64 },

    #[error("integral tail could not be certified up to radius {radius}")]
    TailNotCertified { radius: f64 },

    #[error("no deterministic moment route for {0}")]
    NoDeterministicRoute(String),

    #[error("lattice entry does not fit in 64 bits")]
    LatticeOverflow,

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
