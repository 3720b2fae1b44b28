use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the library.
///
/// Errors are split into input problems ([`Error::Domain`], [`Error::Config`],
/// [`Error::Parse`]) and failures of a numerical method on valid input
/// ([`Error::Numeric`], [`Error::Resonance`], [`Error::NotConverged`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The requested quantity sits on a pole (infinite scattering length,
    /// `tan δ₀` diverging, unitarity point of the trap spectrum).
    #[error("resonance: {0}")]
    Resonance(String),

    /// An iterative estimate did not settle. Carries the sequence of
    /// `(parameter, estimate)` pairs that was produced.
    #[error("not converged: {msg}")]
    NotConverged {
        msg: String,
        history: Vec<(f64, f64)>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than by a
    /// numerical method.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Config(_) | Error::Parse { .. } | Error::Io(_)
        )
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
