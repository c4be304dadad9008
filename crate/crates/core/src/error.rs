use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("GMRES broke down at step {step} with residual {residual:e}: operator is singular on the Krylov subspace")]
    Breakdown { step: usize, residual: f64 },

    #[error("GMRES stagnated at step {0}; the residual polynomial has a root at infinity")]
    Stagnation(usize),

    #[error("level set at delta = {delta:e} touches the grid boundary; enlarge the window")]
    ContourTouchesBoundary { delta: f64 },

    #[error("empty admissible range: {0}")]
    EmptyRange(String),

    #[error("bound hypothesis violated: {0}")]
    BoundHypothesis(String),

    #[error("defective eigenvalue at {0}; condition number is infinite")]
    Defective(String),

    #[error("zero pivot in row {0}")]
    ZeroPivot(usize),

    #[error("line search failed after {0} step reductions")]
    LineSearchFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by a numerical event.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::InvalidArgument(_)
                | Error::EmptyRange(_)
                | Error::BoundHypothesis(_)
        )
    }
}
