//! Crate-wide error type and result alias.

use thiserror::Error;

/// Everything that can go wrong while building spaces, Hamiltonians, or runs.
#[derive(Debug, Error)]
pub enum CqedError {
    /// Objects defined on different Hilbert spaces or with incompatible shapes.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    /// A truncation too small for the requested state family. `needed` is the
    /// smallest adequate cutoff.
    #[error("cutoff n_max = {got} too small for {context}; need n_max >= {needed}")]
    CutoffTooSmall {
        needed: usize,
        got: usize,
        context: String,
    },

    /// A parameter combination that makes a formula singular (vanishing
    /// denominator or coupling).
    #[error("singular parameter: {0}")]
    SingularParameter(String),

    /// A state constructor produced the zero vector.
    #[error("zero-norm state: {0}")]
    ZeroVector(String),

    /// A state or matrix that violates a structural invariant (normalization,
    /// Hermiticity, trace, positivity).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// An iterative routine that ran out of budget. `achieved` is the error
    /// level actually reached against the `requested` tolerance.
    #[error("convergence failure in {context}: achieved {achieved:.3e}, requested {requested:.3e}")]
    Convergence {
        achieved: f64,
        requested: f64,
        context: String,
    },

    /// A scenario configuration that failed validation. Lists every offending
    /// field, not just the first.
    #[error("invalid configuration: {}", fields.join("; "))]
    InvalidConfig { fields: Vec<String> },

    /// File I/O, tagged with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CqedError {
    /// Process exit code for the CLI: config errors 2, convergence 3, i/o 4,
    /// anything else 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CqedError::InvalidConfig { .. } => 2,
            CqedError::Convergence { .. } => 3,
            CqedError::Io { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CqedError>;
