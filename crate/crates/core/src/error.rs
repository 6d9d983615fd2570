use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracketing { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// Adaptive quadrature ran out of panels before reaching tolerance.
    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    QuadratureExhausted { estimate: f64, error_bound: f64 },

    #[error("unsupported prior: {0}")]
    UnsupportedPrior(String),

    /// The model sits outside the regime where a quantity is defined.
    #[error("numeric domain error: {0}")]
    Domain(String),

    #[error("no-solution: {0}")]
    NoSolution(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
