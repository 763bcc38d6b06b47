use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integration bounds out of order: lo={lo} > hi={hi}")]
    InvalidBounds { lo: f64, hi: f64 },

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("integrand is not finite at node {at} (value {value})")]
    NonFinite { at: f64, value: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    NoConvergence { estimate: f64, error: f64 },

    #[error("degenerate interval: a = b = {0}")]
    DegenerateInterval(f64),

    #[error("invalid interval [{a}, {b}]{}", .x.map(|x| format!(" with x = {x}")).unwrap_or_default())]
    InvalidInterval { a: f64, b: f64, x: Option<f64> },

    #[error("argument {u} outside domain [{lo}, {hi}]")]
    DomainViolation { u: f64, lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },

    #[error("kernel {0} has divergent moment integrals")]
    DivergentKernel(String),

    #[error("bad exponent: {0}")]
    BadExponent(String),

    #[error("exponent n = {0} needs L_{{-1}}, which the p-logarithmic mean excludes")]
    ExcludedExponent(i32),

    #[error("class {0} requires a kernel h")]
    ClassRequiresKernel(&'static str),

    #[error("class {0} requires the parameter s")]
    ClassRequiresS(&'static str),

    #[error("function is negative at x = {x} (value {value})")]
    NegativeFunction { x: f64, value: f64 },

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("statement {0} needs {1}")]
    MissingInput(&'static str, &'static str),
}

impl Error {
    pub(crate) fn parse(what: &'static str, input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            what,
            input: input.to_string(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's inputs rather than by a
    /// numerical failure during evaluation.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::NonFinite { .. } | Error::NoConvergence { .. })
    }
}
