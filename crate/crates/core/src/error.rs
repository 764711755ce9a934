use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of a function (non-finite values,
    /// out-of-horizon table lookups).
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violates its declared invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A caller-side precondition of a bound or verification routine does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A closed-form quantity diverges (e.g. a logarithm pole).
    #[error("divergence: {0}")]
    Divergence(String),

    /// g(x, t) = 0, so the control channel is lost.
    #[error("controllability lost{}: g(x, t) = 0", at_time(.t))]
    Controllability { t: Option<f64> },

    /// The plant state became non-finite.
    #[error("numerical blow-up at t = {t}: {detail}")]
    BlowUp { t: f64, detail: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Scenario-file problem, reported with the file and line where possible.
    #[error("{location}: {message}")]
    Config { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn at_time(t: &Option<f64>) -> String {
    t.map(|t| format!(" at t = {t}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the input configuration rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parameter { .. }
                | Error::Config { .. }
                | Error::Precondition(_)
                | Error::Domain(_)
        )
    }
}
