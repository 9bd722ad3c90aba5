use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid hyperparameter {name} = {value} for {family} loss (expected {expected})")]
    Hyperparameter {
        family: &'static str,
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{0} loss has no asymptotic f-function")]
    UnsupportedFamily(&'static str),

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("training diverged at epoch {epoch}: objective {value}")]
    Divergence { epoch: usize, value: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_) | Error::NonConvergence { .. } | Error::Divergence { .. }
        )
    }
}
