use thiserror::Error;

/// Errors raised by state construction, transforms, and time integration.
#[derive(Debug, Error)]
pub enum Error {
    /// Arrays of mismatched length, grids that do not agree, malformed input.
    #[error("structural error: {0}")]
    Structural(String),

    /// An operation was called outside the set where it is defined
    /// (non-monotone map, uncovered support, energy above the bound, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A state violates a structural identity it is required to satisfy.
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    /// Time integration had to stop.
    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(name: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Structural(format!(
            "{name} has {got} samples, grid has {want} nodes"
        )));
    }
    Ok(())
}
