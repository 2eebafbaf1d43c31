use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular mean-field denominator ({which}): |d| = {magnitude:e}")]
    SingularDenominator { which: &'static str, magnitude: f64 },

    #[error("eigendecomposition of the drift matrix did not converge")]
    EigendecompositionFailure,

    #[error("system is not stable: max Re(eigenvalue) = {max_real_part:e}")]
    UnstableSystem { max_real_part: f64 },

    #[error("Lyapunov operator is singular")]
    SingularSystem,

    #[error("no convergence after {steps} steps (relative residual {residual:e})")]
    NoConvergence { steps: usize, residual: f64 },

    #[error("unphysical covariance: {0}")]
    UnphysicalCovariance(String),

    #[error("no {kind} crossing of E_N > 0 along `{axis}` in [{start}, {end}]")]
    NoCrossing {
        kind: &'static str,
        axis: &'static str,
        start: f64,
        end: f64,
    },

    #[error("unknown preset `{0}` (expected fig2, fig3, fig4 or fig5)")]
    UnknownPreset(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("config error: {0}")]
    ConfigParse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag for this error.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::SingularDenominator { .. } => "SingularDenominator",
            Error::EigendecompositionFailure => "EigendecompositionFailure",
            Error::UnstableSystem { .. } => "UnstableSystem",
            Error::SingularSystem => "SingularSystem",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::UnphysicalCovariance(_) => "UnphysicalCovariance",
            Error::NoCrossing { .. } => "NoCrossing",
            Error::UnknownPreset(_) => "UnknownPreset",
            Error::InvalidSweep(_) => "InvalidSweep",
            Error::ConfigParse(_) => "ConfigParseError",
            Error::Io(_) => "IoError",
        }
    }

    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::ConfigParse(_) | Error::UnknownPreset(_) | Error::InvalidSweep(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
