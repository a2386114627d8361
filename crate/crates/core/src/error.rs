use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("subsystem index {index} out of range for a {len}-subsystem state")]
    SubsystemIndex { index: usize, len: usize },

    #[error("subsystem {index} is not an optical mode")]
    NotAMode { index: usize },

    #[error("subsystem {index} is not an ensemble qudit")]
    NotAnEnsemble { index: usize },

    #[error("mode {mode} would hold {occupation} photons, above its cutoff of {cutoff}")]
    CutoffExceeded { mode: usize, occupation: usize, cutoff: u8 },

    #[error("basis label {label:?} does not fit the subsystem layout")]
    InvalidLabel { label: Vec<u8> },

    #[error("projector label set is empty")]
    EmptyProjector,

    #[error("partial trace must keep at least one subsystem")]
    EmptyKeepSet,

    #[error("subsystem layouts do not match")]
    DimensionMismatch,

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("ensemble {ensemble} carries weight {weight:e} outside the logical {{g, s}} subspace")]
    OutsideLogicalSubspace { ensemble: usize, weight: f64 },

    #[error("ensemble {ensemble} has support on both interaction and storage levels")]
    MixedStorageTransfer { ensemble: usize },

    #[error("mode {0} appears more than once")]
    DuplicateModes(usize),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },

    #[error("Markov state space exceeds the bound of {bound} states")]
    StateSpaceTooLarge { bound: usize },

    #[error("growth chain is not absorbing from every state (singular system)")]
    NonAbsorbingChain,
}

/// Checks `cond`, otherwise reports `name = value` as invalid.
pub(crate) fn ensure(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, reason })
    }
}
