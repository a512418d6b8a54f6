use thiserror::Error;

/// Errors raised by the model, estimation and pricing routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The moment generating function of the innovation does not exist at
    /// the requested scale: the conditional volatility is too large for the
    /// current tail state.
    #[error(
        "mgf diverges at sigma={sigma:e}, B={b}: theta - beta*sigma - gamma^2*sigma^2/2 = {margin:e}{}",
        location.map(|(m, n)| format!(" (path {m}, step {n})")).unwrap_or_default()
    )]
    MgfDivergence {
        sigma: f64,
        b: f64,
        margin: f64,
        location: Option<(usize, usize)>,
    },

    #[error("quadrature failed at x={x}: error estimate {error:e}")]
    QuadratureFailure { x: f64, error: f64 },

    #[error("probability {0} is outside (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("optimizer did not converge within {evals} evaluations")]
    NonConvergence { evals: usize },

    #[error("covariance stationarity violated: xi + zeta = {0}")]
    Stationarity(f64),

    #[error("skewness-kurtosis curve rejected: {0}")]
    CurveRejected(String),

    #[error("maturity of {maturity} steps exceeds the simulated horizon of {horizon} steps")]
    MaturityOutOfRange { maturity: usize, horizon: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("market price must be positive, got {price} at index {index}")]
    NonPositivePrice { index: usize, price: f64 },

    #[error("table format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
