use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("mesh generation failed: {0}")]
    Mesh(String),

    #[error("solver did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("lemma check failed: {0}")]
    LemmaViolation(String),

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that stem from an iterative solver rather than bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(self, Error::NotConverged { .. } | Error::Reconstruction(_))
    }
}
