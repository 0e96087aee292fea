use thiserror::Error;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PRECISION: u8 = 3;
pub const EXIT_NONCONVERGENCE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] oppq_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A requested level is not among the roots found.
    #[error("{0}")]
    NotFound(String),

    /// Validation ran but some checks failed; the report was already printed.
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize, precision: bool },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use oppq_core::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(E::Config(_)) => EXIT_USAGE,
            CliError::Core(E::Precision { .. }) => EXIT_PRECISION,
            CliError::Core(E::NoKernel { .. } | E::NonConvergence(_)) => EXIT_NONCONVERGENCE,
            CliError::NotFound(_) => EXIT_NONCONVERGENCE,
            CliError::ChecksFailed { precision: true, .. } => EXIT_PRECISION,
            _ => EXIT_FAILURE,
        }
    }
}
