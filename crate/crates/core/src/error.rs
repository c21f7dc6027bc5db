use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("size mismatch for {what}: expected {expected}, found {found}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("rank mismatch: cannot pair a {left}-form with a {right}-form")]
    RankMismatch { left: usize, right: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite value in {what} at node {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("{what} is not positive at node {index} (x = {x})")]
    NonPositive { what: &'static str, index: usize, x: f64 },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{what} did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("spectral gap indistinguishable from zero (lambda_0 = {lambda0:e}, lambda_1 = {lambda1:e})")]
    VanishingGap { lambda0: f64, lambda1: f64 },

    #[error("first nonzero eigenvalue is degenerate ({lambda1:e} vs {lambda2:e}); its q-derivative is undefined")]
    DegenerateEigenvalue { lambda1: f64, lambda2: f64 },

    #[error("slow-mode group is empty")]
    EmptyGroup,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
