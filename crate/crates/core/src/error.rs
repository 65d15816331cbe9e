use thiserror::Error;

/// Errors produced by the solvers, the problem registry and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("direction is not a descent direction (lambda = {lambda:e})")]
    NotDescent { lambda: f64 },

    #[error("line search failed after {trials} trials (last step {alpha:e})")]
    LineSearchFailed { trials: usize, alpha: f64 },

    #[error("objective is not finite at step {alpha:e}")]
    NonFiniteObjective { alpha: f64 },

    #[error("no root of the directional derivative found up to step {alpha_max:e}")]
    NoRoot { alpha_max: f64 },

    #[error("simplex QP did not converge in {iterations} iterations (residual {residual:e})")]
    SubproblemFailed {
        iterations: usize,
        residual: f64,
        weights: Vec<f64>,
    },

    #[error("point is critical (lambda = {lambda:e})")]
    Critical { lambda: f64 },

    #[error("unknown problem `{name}`; valid problems: {}", valid.join(", "))]
    UnknownProblem { name: String, valid: Vec<String> },

    #[error("unknown method `{0}`; valid methods: TT-PRP, TT-PRP1, PRP+, SD")]
    UnknownMethod(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("manifest serialization failed: {0}")]
    Manifest(#[from] toml::ser::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
