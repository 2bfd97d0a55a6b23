use thiserror::Error;

pub type Result<T> = std::result::Result<T, UagError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UagError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("reference bank is empty")]
    NoReferences,

    #[error("zero-norm vector where a cosine is required")]
    ZeroNorm,

    #[error("step {step} outside [1, {horizon}]")]
    StepOutOfRange { step: usize, horizon: usize },

    #[error("token id {token} outside vocabulary of size {vocab}")]
    TokenOutOfRange { token: usize, vocab: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty token sequence")]
    EmptySequence,

    #[error("corpus needs at least {needed} texts, got {found}")]
    CorpusTooSmall { needed: usize, found: usize },

    #[error("no n-grams of order {0} in the corpus")]
    NoNgrams(usize),

    #[error("no admissible point: every point exceeds degeneration {0}")]
    NoAdmissiblePoint(f64),
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(UagError::DimensionMismatch { expected, found })
    }
}
