use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("chain needs at least 2 spins, got {0}")]
    TooFewSpins(usize),

    #[error("unknown coupling `{0}` (expected heisenberg, ising_z, ising_x or none)")]
    UnknownCoupling(String),

    #[error("unknown bath kind `{0}` (expected stationary, drift, microcanonical or markovian)")]
    UnknownBath(String),

    #[error("site {site} out of range for a chain of {n_spins} spins")]
    SiteOutOfRange { site: usize, n_spins: usize },

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("density matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot average an empty list of density matrices")]
    EmptyAverage,

    #[error("husimi grid needs at least 2x2 samples, got {theta_res}x{phi_res}")]
    HusimiResolution { theta_res: usize, phi_res: usize },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("output directory {0} already exists (use --force to overwrite)")]
    OutputExists(PathBuf),

    #[error("malformed schedule file: {0}")]
    Schedule(String),

    #[error("malformed config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.to_string(),
        reason: reason.into(),
    }
}
