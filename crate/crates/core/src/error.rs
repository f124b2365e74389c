//! Error type shared by the state-level modules.

use thiserror::Error;

use crate::fock::FockError;
use crate::tensor::TensorError;

/// Errors raised while building or querying simulated states.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid architecture: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("site index {site} out of range for {num_sites} sites")]
    InvalidSite { site: usize, num_sites: usize },

    #[error("bond index {bond} out of range for {num_bonds} bonds")]
    InvalidBond { bond: usize, num_bonds: usize },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("conditioning event has zero probability")]
    ZeroProbability,

    #[error("outcome length {got} does not match {expected} measured sites")]
    LengthMismatch { expected: usize, got: usize },

    #[error("need at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("instance needs {needed} amplitudes, above the cap of {cap}")]
    MemoryCap { needed: usize, cap: usize },

    #[error(transparent)]
    Fock(#[from] FockError),

    #[error(transparent)]
    Tensor(#[from] TensorError),
}
