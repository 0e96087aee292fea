use thiserror::Error;

/// Errors produced by the quantization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Working precision ran out; the caller should raise `decimal_digits`.
    #[error("precision exhausted at degree {degree}: {detail}; raise decimal_digits")]
    Precision { degree: usize, detail: String },

    #[error("no kernel: smallest relative pivot {pivot} is above the singularity threshold {threshold}")]
    NoKernel { pivot: String, threshold: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("singular point: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;
