use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("generator {0} is the zero vector")]
    ZeroGenerator(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported cone: {0}")]
    UnsupportedNonSimplicial(String),
    #[error("nonnegative least squares did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("point {0:?} is outside the weight domain")]
    OutOfDomain(Vec<f64>),
    #[error("closed ball around {center:?} with radius {radius} is not inside the domain")]
    BallNotInDomain { center: Vec<f64>, radius: f64 },
    #[error("invalid base region: {0}")]
    InvalidBase(String),
    #[error("invalid parameters: {0}")]
    BadParameters(String),
    #[error("slice integrand f(t)e^(-2 pi y.t) is not integrable at height {0:?}")]
    DivergentSlice(Vec<f64>),
    #[error("truncation too small: tail estimate {tail:.3e} exceeds tolerance {tol:.3e}")]
    TruncationTooSmall { tail: f64, tol: f64 },
    #[error("slice tail too large at height {y:?}: edge ratio {ratio:.3e}")]
    SliceTailTooLarge { y: Vec<f64>, ratio: f64 },
    #[error("height {0:?} is not inside the base region of the tube function")]
    NotInBase(Vec<f64>),
    #[error("mollified recovery did not converge: {0}")]
    NoConvergence(String),
    #[error("mollifier basis rejected: {0}")]
    BadBasis(String),
    #[error("alpha = {0} must exceed -1")]
    AlphaOutOfRange(f64),
    #[error("dual kernel diverges at t = {0:?}")]
    KernelDivergence(Vec<f64>),
    #[error("norm diverges: {0}")]
    DivergentNorm(String),
    #[error("growth ladder too short: {0}")]
    InsufficientDecayWindow(String),
    #[error("density support is not inside the wedge intersection K: {0}")]
    SupportNotInK(String),
    #[error("slice L2 norms unbounded as y -> 0: {0}")]
    HardyLittlewoodUnbounded(String),
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("unresolved reference: {0}")]
    UnresolvedReference(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::ConfigParse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
