use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point outside the open domain of `{entropy}`: {detail}")]
    DomainViolation { entropy: String, detail: String },

    #[error("dual point outside the image of the mirror map of `{entropy}`: {detail}")]
    DualDomainViolation { entropy: String, detail: String },

    #[error("mirror-map inversion did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("unavailable: {0}")]
    Unavailable(String),

    #[error("estimate did not stabilize: {0}")]
    Divergent(String),

    #[error("step size {h} outside the admissible window (0, {upper})")]
    InadmissibleStepSize { h: f64, upper: f64 },

    #[error("inadmissible regime: kappa_tilde = {kappa_tilde} is not below sqrt(2m) = {limit}")]
    InadmissibleRegime { kappa_tilde: f64, limit: f64 },

    #[error("entropy `{0}` violates the self-concordance-like condition and cannot drive the sampler")]
    InadmissibleEntropy(String),

    #[error("step size {h} outside the window (0, {upper}) of the bound")]
    StepOutOfWindow { h: f64, upper: f64 },

    #[error("eps = {eps} outside the validity window (0, {upper})")]
    EpsOutOfRange { eps: f64, upper: f64 },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("method unavailable: {0}")]
    MethodUnavailable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Assumption-gate failures (step-size window, kappa_tilde regime, eps window).
    pub fn is_gate_failure(&self) -> bool {
        matches!(
            self,
            Error::InadmissibleStepSize { .. }
                | Error::InadmissibleRegime { .. }
                | Error::InadmissibleEntropy(_)
                | Error::StepOutOfWindow { .. }
                | Error::EpsOutOfRange { .. }
        )
    }

    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalBreakdown(_)
                | Error::ConvergenceFailure(_)
                | Error::DualDomainViolation { .. }
                | Error::Divergent(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
