use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix of dimension {dim} needs {needed_mb} MB, budget is {budget_mb} MB")]
    BudgetExceeded {
        dim: usize,
        needed_mb: usize,
        budget_mb: usize,
    },

    #[error("principal logarithm is ill-conditioned: {0}")]
    IllConditionedLog(String),

    #[error("spectrum {0} is not the cube roots of unity")]
    NotCubeRootSpectrum(String),

    #[error("singular Gram matrix")]
    SingularGram,

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("classical verification failed: {0}")]
    ClassicalMismatch(String),

    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
