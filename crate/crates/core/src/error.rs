use thiserror::Error;

/// Everything that can go wrong while building or checking a network.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: usize,
        got: usize,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("singular system: rank {rank} < {needed}")]
    Singular { rank: usize, needed: usize },
    #[error("sets are not strictly linearly separable (best margin {margin:e})")]
    Inseparable { margin: f64 },
    #[error("ordering violated: {0}")]
    Ordering(String),
    #[error("bundle budget exhausted after {rounds} rounds: point {point} has margin {margin:e}")]
    BundleBudget {
        rounds: usize,
        point: usize,
        margin: f64,
    },
    #[error("perturbation budget exhausted: {0}")]
    PerturbationBudget(String),
    #[error("linear program: {0}")]
    Lp(#[from] crate::lp::LpError),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Tag an error with the construction stage it came from.
    pub fn at(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
