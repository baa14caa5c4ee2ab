use thiserror::Error;

/// Errors raised by the estimation pipeline and the model constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension {0}: at least 2 is required")]
    InvalidDimension(usize),

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("state is rank deficient: eigenvalue {eigenvalue:e} <= rank tolerance {tol:e}")]
    RankDeficient { eigenvalue: f64, tol: f64 },

    #[error("parameter outside the model domain: {0}")]
    Domain(String),

    #[error("degenerate chart: {0}")]
    DegenerateChart(String),

    #[error("numerical overflow: {0}")]
    NumericalOverflow(String),

    #[error("quantum Fisher information matrix is singular (min eigenvalue {min_eigenvalue:e})")]
    SingularQfim { min_eigenvalue: f64 },

    #[error("reparametrization matrix is singular or malformed")]
    InvalidReparametrization,

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("Gaussian state is pure (mu = {mu}) and the purity term of the QFIM diverges")]
    PureStateSingular { mu: f64 },

    #[error("Fock truncation too small: trace deficit {deficit:e} at n_max = {n_max}")]
    Truncation { deficit: f64, n_max: usize },

    #[error("invalid parameter subset: {0}")]
    InvalidSubset(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("consistency check failed: {0}")]
    CheckFailed(String),
}

impl Error {
    /// Stable machine-readable name, used by the command line frontend.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "NotHermitian",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidDimension(_) => "InvalidDimension",
            Error::InvalidState(_) => "InvalidState",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::Domain(_) => "DomainError",
            Error::DegenerateChart(_) => "DegenerateChart",
            Error::NumericalOverflow(_) => "NumericalOverflow",
            Error::SingularQfim { .. } => "SingularQfim",
            Error::InvalidReparametrization => "InvalidReparametrization",
            Error::InvalidPovm(_) => "InvalidPOVM",
            Error::PureStateSingular { .. } => "PureStateSingular",
            Error::Truncation { .. } => "TruncationError",
            Error::InvalidSubset(_) => "InvalidSubset",
            Error::Io(_) => "IoError",
            Error::Config(_) => "ConfigError",
            Error::CheckFailed(_) => "CheckFailed",
        }
    }

    /// Process exit status for the command line frontend. Status 2 is left
    /// to argument parsing.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Domain(_) => 3,
            Error::DegenerateChart(_) => 4,
            Error::NotHermitian { .. } => 5,
            Error::DimensionMismatch { .. } => 6,
            Error::InvalidDimension(_) => 7,
            Error::InvalidState(_) => 8,
            Error::RankDeficient { .. } => 9,
            Error::NumericalOverflow(_) => 10,
            Error::SingularQfim { .. } => 11,
            Error::InvalidReparametrization => 12,
            Error::InvalidPovm(_) => 13,
            Error::PureStateSingular { .. } => 14,
            Error::Truncation { .. } => 15,
            Error::InvalidSubset(_) => 16,
            Error::Io(_) => 17,
            Error::Config(_) => 18,
            Error::CheckFailed(_) => 19,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
