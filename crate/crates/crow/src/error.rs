//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or option is unusable for the requested operation.
    #[error("configuration error: {0}")]
    Config(String),

    /// One or more model invariants are violated; the report lists them.
    #[error("validation failed:\n{0}")]
    Validation(crate::model::ValidationReport),

    /// Array lengths or index ranges do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The integrator produced non-finite amplitudes.
    #[error("integration diverged at t = {t}: max |amplitude| = {max_abs:e}")]
    Divergence { t: f64, max_abs: f64 },

    /// The modulation frequency hits a lattice mode exactly; the stationary
    /// solution is singular there.
    #[error("modulation resonant with mode k = {k} (omega_k = {omega_k}): stationary solution is singular")]
    Resonance { k: i32, omega_k: f64 },

    /// A trajectory or time window does not contain the requested data.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
