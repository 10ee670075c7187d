use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("spin index {index} out of range for a system of {n_spins} spins")]
    SpinIndex { index: usize, n_spins: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "integration step {step} is too large: frequency {frequency} needs a step of at most {max_step}"
    )]
    StepTooLarge {
        step: f64,
        max_step: f64,
        frequency: f64,
    },

    #[error("pulse design impossible: {0}")]
    Design(String),

    #[error("period extraction failed: {0}")]
    PeriodExtraction(String),

    #[error("invalid experiment config: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
