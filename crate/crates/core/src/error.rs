use thiserror::Error;

/// Errors raised by the discretization, geometry and energy layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("projection singularity: {0}")]
    ProjectionSingularity(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("no harmonic spinor exists for the antiperiodic spin structure")]
    NoHarmonicSpinor,

    #[error("point outside chart domain: {0}")]
    ChartDomain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
