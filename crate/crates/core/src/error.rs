use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error class, used for CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("series has no nonzero coefficient")]
    ZeroSeries,
    #[error("tail of the series cannot be certified below {tol:e} within K_max = {k_max} ({what})")]
    NoFiniteTail { what: String, tol: f64, k_max: i64 },
    #[error("position {x} lies outside [-{l}, {l}]")]
    OutOfDomain { x: f64, l: f64 },
    #[error("coefficient series is not absolutely summable")]
    NonSummable,
    #[error("theta function requires tau > 0, got {0}")]
    InvalidTau(f64),
    #[error("Gaussian tail requires gamma > 0, got {0}")]
    InvalidGamma(f64),
    #[error("mollifier width epsilon = {epsilon} too large for half-length {l} (need 3 epsilon < l)")]
    EpsilonTooLarge { epsilon: f64, l: f64 },
    #[error("target x* = {x_star} is within 3 epsilon of a wall (l = {l}, epsilon = {epsilon})")]
    TargetTooCloseToWall { x_star: f64, l: f64, epsilon: f64 },
    #[error("density is not even (max asymmetry {0:e})")]
    DensityNotEven(f64),
    #[error("density increases with |q| near q = {0}")]
    DensityNotMonotone(f64),
    #[error("density has no finite second moment")]
    InfiniteSecondMoment,
    #[error("density is not normalized: {0}")]
    DensityNotNormalized(String),
    #[error("quadrature did not reach tolerance {tol:e} (estimated error {error:e}) on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64, tol: f64, error: f64 },
    #[error("state has no differentiable closed-form evaluator")]
    NotInDomain,
    #[error("sequence is not monotone non-increasing at index {0}")]
    NotMonotone(usize),
    #[error("cosine-sum bound is singular at x = {0} (x is a multiple of 2 pi)")]
    AtSingularity(f64),
    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NoFiniteTail { .. }
            | Error::QuadratureFailure { .. }
            | Error::NonSummable
            | Error::Io(_) => ErrorClass::Numerical,
            _ => ErrorClass::Validation,
        }
    }

    /// Short machine-readable name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::ZeroSeries => "ZeroSeries",
            Error::NoFiniteTail { .. } => "NoFiniteTail",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::NonSummable => "NonSummable",
            Error::InvalidTau(_) => "InvalidTau",
            Error::InvalidGamma(_) => "InvalidGamma",
            Error::EpsilonTooLarge { .. } => "EpsilonTooLarge",
            Error::TargetTooCloseToWall { .. } => "TargetTooCloseToWall",
            Error::DensityNotEven(_) => "DensityNotEven",
            Error::DensityNotMonotone(_) => "DensityNotMonotone",
            Error::InfiniteSecondMoment => "InfiniteSecondMoment",
            Error::DensityNotNormalized(_) => "DensityNotNormalized",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::NotInDomain => "NotInDomain",
            Error::NotMonotone(_) => "NotMonotone",
            Error::AtSingularity(_) => "AtSingularity",
            Error::Io(_) => "Io",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
