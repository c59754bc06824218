use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("Fock cutoff too small: population {population:.3e} in top level of mode {mode} (raise n_max)")]
    Truncation { mode: usize, population: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("resonant channel {label}: zero detuning denominator")]
    Resonance { label: String },

    #[error("optimizer did not reach cost {target:.1e}; best cost {best:.3e}")]
    Optimization { target: f64, best: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
