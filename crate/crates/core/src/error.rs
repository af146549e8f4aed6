use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("non-finite parameter: {0}")]
    NonFinite(String),

    #[error("zero vector cannot be normalized")]
    ZeroNorm,

    #[error(
        "generator norm {norm:.3e} exceeds trust bound {bound:.3e} at cutoff {cutoff}; \
         raise the cutoff"
    )]
    GuardRejected { cutoff: usize, norm: f64, bound: f64 },

    #[error("state is truncation-flagged: tail mass {tail:.3e} >= tolerance {eps:.3e}")]
    TruncationFlagged { tail: f64, eps: f64 },

    #[error("cutoff ladder exhausted at {max}: parameters out of supported range")]
    CutoffCeiling { max: usize },

    #[error("degenerate normalization: squared norm {0:.3e} below tolerance")]
    DegenerateNorm(f64),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Stable process exit code for the CLI: 2 validation, 3 truncation, 4 solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpec(_)
            | Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::ZeroNorm
            | Error::DegenerateNorm(_)
            | Error::Serde(_) => 2,
            Error::GuardRejected { .. }
            | Error::TruncationFlagged { .. }
            | Error::CutoffCeiling { .. } => 3,
            Error::SolverFailure(_) | Error::Io(_) => 4,
        }
    }
}
