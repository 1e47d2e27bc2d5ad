use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("input error: {0}")]
    Input(String),
    #[error("pattern denotes the empty language")]
    EmptyLanguage,
    #[error("model is missing transition rows for reachable contexts: {0:?}")]
    MissingContext(Vec<String>),
    #[error("non-stochastic model: {0}")]
    NonStochastic(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("spectral precomputation failed: {0}; use --method full")]
    Spectral(String),
    #[error("partial recursion did not converge: {0}")]
    Convergence(String),
    #[error("degree probe failed: {0}")]
    DegreeProbe(String),
    #[error("fraction reconstruction failed: {0}")]
    Reconstruction(String),
    #[error("estimated memory {needed_bytes} bytes exceeds budget {budget_bytes} (MT)")]
    MemoryBudget { needed_bytes: u64, budget_bytes: u64 },
    #[error("requested order outside precomputed range: {0}")]
    Range(String),
    #[error("floating-point precision exhausted: {0}; retry with --mode exact or more --precision-bits")]
    PrecisionExhausted(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Exact(#[from] patdist_exact::ExactError),
}

impl Error {
    /// Process exit code class: 2 input, 3 method failure, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax { .. }
            | Error::Input(_)
            | Error::EmptyLanguage
            | Error::MissingContext(_)
            | Error::NonStochastic(_)
            | Error::Fit(_) => 2,
            Error::Spectral(_)
            | Error::Convergence(_)
            | Error::DegreeProbe(_)
            | Error::Reconstruction(_)
            | Error::MemoryBudget { .. }
            | Error::PrecisionExhausted(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
