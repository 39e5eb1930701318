use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Every variant carries enough context to be rendered as a machine-readable
/// error code by the command-line front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {value} outside domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("divergent series: {0}")]
    Divergence(String),

    #[error("quadrature did not reach tolerance after {panels} panels (estimate {estimate}, error {error})")]
    Accuracy {
        estimate: f64,
        error: f64,
        panels: usize,
    },

    #[error("peak is not strictly concave (second derivative {0})")]
    NonConcavePeak(f64),

    #[error("maximum at domain endpoint {0} is outside the interior-peak asymptotics")]
    EndpointPeak(f64),

    #[error("degenerate maximum at {location}: second derivative {second_derivative}")]
    DegeneratePeak {
        location: f64,
        second_derivative: f64,
    },

    #[error("found {found} maximizing points; only one or two isolated maxima are supported")]
    UnsupportedMultiplicity { found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Short stable identifier used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OutOfDomain { .. } | Error::Domain(_) => "domain",
            Error::Divergence(_) => "divergence",
            Error::Accuracy { .. } => "accuracy",
            Error::NonConcavePeak(_) => "non_concave_peak",
            Error::EndpointPeak(_) => "endpoint_peak",
            Error::DegeneratePeak { .. } => "degenerate_peak",
            Error::UnsupportedMultiplicity { .. } => "unsupported_multiplicity",
            Error::InvalidParameter(_) => "invalid_parameter",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
