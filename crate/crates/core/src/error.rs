use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("{what}: quadrature did not converge (achieved error {achieved:.3e})")]
    Quadrature { what: String, achieved: f64 },

    #[error("operation requires a radial measure")]
    NonRadial,

    #[error("operation requires an isotropic model")]
    NotIsotropic,

    #[error("exponent is not monotone on the evaluation window near {at:.6e}")]
    NotMonotone { at: f64 },

    #[error("{0} is outside the computed range")]
    OutOfRange(String),

    #[error("sublevel grid needs more than {cap} cells")]
    GridCap { cap: usize },

    #[error("xi-window insufficient at t={t}: e^(-t Re psi) is still {amplitude:.3e} at |xi|={xi:.3e}")]
    WindowInsufficient { t: f64, xi: f64, amplitude: f64 },

    #[error("e^(-t psi) is not integrable at t={t} (decay slope {slope:.3} of log integrand vs log|xi|)")]
    NonIntegrable { t: f64, slope: f64 },

    #[error("model file line {line}, field `{field}`: {message}")]
    ModelFile { line: usize, field: String, message: String },

    #[error("unknown builtin model `{0}`")]
    UnknownBuiltin(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Refusals are verdicts about the model (no density at this t), not failures.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::WindowInsufficient { .. } | Error::NonIntegrable { .. }
        )
    }

    pub(crate) fn quad(what: impl Into<String>, achieved: f64) -> Self {
        Error::Quadrature {
            what: what.into(),
            achieved,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
