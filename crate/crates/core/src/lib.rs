//! Second-quantized model of massive-particle absorption by a small medium.
//!
//! [`fock`] holds the occupation-number machinery, [`field`] the plane-wave
//! basis and field operator, [`medium`] the phenomenological absorber,
//! [`perturbation`] the closed-form rates and [`oracle`] a brute-force
//! evaluator that checks them. [`config`] and [`scan`] drive position scans
//! from a TOML file.

pub mod config;
pub mod error;
pub mod field;
pub mod fock;
pub mod medium;
pub mod oracle;
pub mod perturbation;
pub mod scan;

pub use error::{Error, Result};
pub use field::{ModeBasis, Position, Wavepacket};
pub use fock::{FockState, SlotKey, Statistics};
pub use medium::{MediumChannel, MediumModel};
pub use perturbation::{RateResult, TwoParticleInput};
