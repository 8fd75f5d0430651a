//! Experiment configuration files.
//!
//! Configurations are TOML documents with five tables: `basis`, `packets`,
//! `medium`, `scan` and `run`. Complex numbers are written either as a bare
//! real number or as a two-element `[re, im]` array. See the README for the
//! full grammar.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::error::Error;
use crate::field::{ModeBasis, Position, Wavepacket, DEFAULT_SPINS, NORMALIZATION_TOLERANCE};
use crate::fock::Statistics;
use crate::medium::{MediumChannel, MediumModel};
use crate::perturbation::TwoParticleInput;

/// Packets whose squared norm is off by less than this are renormalized with
/// a warning; larger deviations are rejected.
pub const RENORMALIZE_LIMIT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{key}: {message}")]
    Semantic { key: String, message: String },
    #[error("{key}: squared norm {norm_sqr} is too far from 1 to renormalize")]
    Normalization { key: String, norm_sqr: f64 },
}

impl ConfigError {
    fn semantic(key: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError::Semantic {
            key: key.into(),
            message: message.to_string(),
        }
    }
}

/// A complex number as it appears in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexValue(pub C64);

impl Serialize for ComplexValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Real(f64),
            Pair([f64; 2]),
        }
        Ok(match Raw::deserialize(deserializer)? {
            Raw::Real(re) => ComplexValue(C64::new(re, 0.0)),
            Raw::Pair([re, im]) => ComplexValue(C64::new(re, im)),
        })
    }
}

impl From<C64> for ComplexValue {
    fn from(c: C64) -> Self {
        ComplexValue(c)
    }
}

fn default_one() -> f64 {
    1.0
}

fn default_spins() -> u32 {
    DEFAULT_SPINS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub box_lengths: Vec<f64>,
    /// Integer wave-number vectors, one per mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<Vec<i64>>>,
    /// Alternatively, take this many lowest-energy modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lowest_modes: Option<usize>,
    #[serde(default = "default_one")]
    pub hbar: f64,
    #[serde(default = "default_one")]
    pub mass: f64,
    #[serde(default = "default_spins")]
    pub spins: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    #[serde(default)]
    pub spin: u32,
    pub amplitudes: Vec<ComplexValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub label: String,
    pub m1: ComplexValue,
    pub m2: ComplexValue,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub alpha: ComplexValue,
    /// `<M_1|M|M>` for first-order rates.
    pub m1: ComplexValue,
    #[serde(default)]
    pub channels: Vec<ChannelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<Vec<f64>>,
    /// Number of evenly spaced points from `start` to `stop`, both included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub order: u8,
    pub statistics: Statistics,
    pub packets: Vec<String>,
    #[serde(default)]
    pub detector_spin: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub basis: BasisSpec,
    pub packets: BTreeMap<String, PacketSpec>,
    pub medium: MediumSpec,
    pub scan: ScanSpec,
    pub run: RunSpec,
}

/// The run a config describes, with every reference resolved.
#[derive(Debug, Clone)]
pub enum Process {
    Single(Wavepacket),
    Pair(TwoParticleInput),
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub basis: Arc<ModeBasis>,
    pub model: MediumModel,
    pub positions: Vec<Position>,
    pub detector_spin: u32,
    pub process: Process,
}

impl Experiment {
    /// The packet whose one-particle rate is reported: the only packet at
    /// first order, `f` at second order.
    pub fn primary(&self) -> &Wavepacket {
        match &self.process {
            Process::Single(wp) => wp,
            Process::Pair(input) => input.f(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
}

/// Parses and validates a TOML config. Packets slightly off normalization are
/// rescaled and reported in `warnings`.
pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigError> {
    let mut config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_column(text, s.start))
            .unwrap_or((0, 0));
        ConfigError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let warnings = config.normalize_packets()?;
    config.build()?;
    Ok(ParsedConfig { config, warnings })
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types serialize to TOML")
    }

    fn normalize_packets(&mut self) -> Result<Vec<String>, ConfigError> {
        let mut warnings = Vec::new();
        for (name, packet) in &mut self.packets {
            let norm_sqr: f64 = packet.amplitudes.iter().map(|a| a.0.norm_sqr()).sum();
            let off = (norm_sqr - 1.0).abs();
            if off <= NORMALIZATION_TOLERANCE {
                continue;
            }
            let key = format!("packets.{name}.amplitudes");
            if off.is_nan() || off >= RENORMALIZE_LIMIT {
                return Err(ConfigError::Normalization { key, norm_sqr });
            }
            let norm = norm_sqr.sqrt();
            for a in &mut packet.amplitudes {
                a.0 /= norm;
            }
            let msg = format!("{key}: squared norm {norm_sqr} renormalized to 1");
            warnings.push(msg);
        }
        Ok(warnings)
    }

    fn build_basis(&self) -> Result<Arc<ModeBasis>, ConfigError> {
        let b = &self.basis;
        if let Some(dim) = b.dim {
            if dim != b.box_lengths.len() {
                return Err(ConfigError::semantic(
                    "basis.dim",
                    format!("{dim} does not match {} box lengths", b.box_lengths.len()),
                ));
            }
        }
        let basis = match (&b.modes, b.lowest_modes) {
            (Some(modes), None) => {
                ModeBasis::new(b.box_lengths.clone(), modes.clone(), b.hbar, b.mass)
                    .map_err(|e| ConfigError::semantic("basis.modes", e))?
            }
            (None, Some(count)) => {
                ModeBasis::lowest_modes(b.box_lengths.clone(), count, b.hbar, b.mass)
                    .map_err(|e| ConfigError::semantic("basis.lowest_modes", e))?
            }
            _ => {
                return Err(ConfigError::semantic(
                    "basis",
                    "give exactly one of `modes` or `lowest_modes`",
                ))
            }
        };
        let basis = basis
            .with_spins(b.spins)
            .map_err(|e| ConfigError::semantic("basis.spins", e))?;
        Ok(Arc::new(basis))
    }

    fn build_packet(
        &self,
        basis: &Arc<ModeBasis>,
        name: &str,
        key: &str,
    ) -> Result<Wavepacket, ConfigError> {
        let spec = self
            .packets
            .get(name)
            .ok_or_else(|| ConfigError::semantic(key, format!("undefined packet `{name}`")))?;
        let amps = spec.amplitudes.iter().map(|a| a.0).collect();
        Wavepacket::normalized(basis.clone(), amps, spec.spin)
            .map_err(|e| ConfigError::semantic(format!("packets.{name}"), e))
    }

    fn build_model(&self) -> Result<MediumModel, ConfigError> {
        let channels = self
            .medium
            .channels
            .iter()
            .map(|c| MediumChannel::new(c.label.clone(), c.m1.0, c.m2.0, c.energy))
            .collect();
        MediumModel::new(self.medium.alpha.0, self.medium.m1.0, channels)
            .map_err(|e| ConfigError::semantic("medium.channels", e))
    }

    fn build_positions(&self, basis: &ModeBasis) -> Result<Vec<Position>, ConfigError> {
        let s = &self.scan;
        let raw: Vec<Vec<f64>> = match (&s.positions, &s.start, &s.stop, s.points) {
            (Some(list), None, None, None) => list.clone(),
            (None, Some(start), Some(stop), Some(points)) => {
                if start.len() != stop.len() {
                    return Err(ConfigError::semantic(
                        "scan.stop",
                        "start and stop differ in dimension",
                    ));
                }
                (0..points)
                    .map(|i| {
                        let t = if points > 1 {
                            i as f64 / (points - 1) as f64
                        } else {
                            0.0
                        };
                        start
                            .iter()
                            .zip(stop)
                            .map(|(a, b)| a + t * (b - a))
                            .collect()
                    })
                    .collect()
            }
            _ => {
                return Err(ConfigError::semantic(
                    "scan",
                    "give either `positions` or all of `start`, `stop`, `points`",
                ))
            }
        };
        raw.iter()
            .enumerate()
            .map(|(i, coords)| {
                basis
                    .position(coords)
                    .map_err(|e| ConfigError::semantic(format!("scan.positions[{i}]"), e))
            })
            .collect()
    }

    /// Resolves every reference and builds the objects a run needs.
    pub fn build(&self) -> Result<Experiment, ConfigError> {
        let basis = self.build_basis()?;
        for name in self.packets.keys() {
            self.build_packet(&basis, name, "packets")?;
        }
        let model = self.build_model()?;
        let positions = self.build_positions(&basis)?;
        let run = &self.run;
        basis
            .check_spin(run.detector_spin)
            .map_err(|e| ConfigError::semantic("run.detector_spin", e))?;

        let expected = match run.order {
            1 | 2 => run.order as usize,
            other => {
                return Err(ConfigError::semantic(
                    "run.order",
                    format!("order {other} not supported, use 1 or 2"),
                ))
            }
        };
        if run.packets.len() != expected {
            return Err(ConfigError::semantic(
                "run.packets",
                format!(
                    "order {} needs {expected} packet name(s), got {}",
                    run.order,
                    run.packets.len()
                ),
            ));
        }
        let mut packets = Vec::with_capacity(expected);
        for (i, name) in run.packets.iter().enumerate() {
            packets.push(self.build_packet(&basis, name, &format!("run.packets[{i}]"))?);
        }
        let process = if expected == 1 {
            Process::Single(packets.remove(0))
        } else {
            if model.channels().is_empty() {
                return Err(ConfigError::semantic(
                    "medium.channels",
                    "second-order runs need at least one channel",
                ));
            }
            let g = packets.pop().expect("two packets");
            let f = packets.pop().expect("two packets");
            let input = TwoParticleInput::new(f, g, run.detector_spin, run.statistics).map_err(
                |e| match e {
                    Error::FermionSameState => ConfigError::semantic("run.packets", e),
                    other => ConfigError::semantic("run", other),
                },
            )?;
            Process::Pair(input)
        };
        Ok(Experiment {
            basis,
            model,
            positions,
            detector_spin: run.detector_spin,
            process,
        })
    }
}
