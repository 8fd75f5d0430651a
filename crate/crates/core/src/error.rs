use thiserror::Error;

use crate::fock::SlotKey;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("slot (mode {}, spin {}) outside the {modes}-mode x {spins}-spin space", .slot.mode, .slot.spin)]
    InvalidSlot {
        slot: SlotKey,
        modes: usize,
        spins: u32,
    },

    #[error("occupation cap {cap} reached at slot (mode {}, spin {})", .slot.mode, .slot.spin)]
    OccupationCap { slot: SlotKey, cap: u32 },

    #[error("states carry different statistics or Fock spaces")]
    StatisticsMismatch,

    #[error("probe state has zero norm")]
    ZeroNorm,

    #[error("wavepackets live on different mode bases")]
    BasisMismatch,

    #[error("mode index {index} out of range for a basis of {len} modes")]
    ModeOutOfRange { index: usize, len: usize },

    #[error("spin label {spin} outside the declared set of {spins} spins")]
    InvalidSpin { spin: u32, spins: u32 },

    #[error("wavepacket norm {norm_sqr} deviates from 1")]
    NotNormalized { norm_sqr: f64 },

    #[error("invalid mode basis: {0}")]
    InvalidBasis(String),

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("unknown medium state `{0}`")]
    UnknownMediumState(String),

    #[error("no matrix element of the medium operator links `{from}` to `{to}`")]
    NoMediumElement { from: String, to: String },

    #[error("resonant energy denominator {denominator:e} in channel `{channel}`")]
    Resonance { channel: String, denominator: f64 },

    #[error("two identical fermions in the same state: the two-particle state vanishes")]
    FermionSameState,

    #[error("{0}")]
    Domain(String),
}
