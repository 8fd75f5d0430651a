//! Phenomenological absorbing medium.
//!
//! The medium operator is never built; only its matrix elements between the
//! ground state `M`, the one-absorption states `M_1(i)` and the
//! two-absorption state `M_2` are stored. Energies are measured from the
//! ground state.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Intermediate medium state `M_1(i)` reached by absorbing one particle.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumChannel {
    pub label: String,
    /// `<M_1(i)| M |M>`
    pub m1: C64,
    /// `<M_2| M |M_1(i)>`
    pub m2: C64,
    /// Energy of `M_1(i)` above the ground state.
    pub energy: f64,
}

impl MediumChannel {
    pub fn new(label: impl Into<String>, m1: C64, m2: C64, energy: f64) -> Self {
        Self {
            label: label.into(),
            m1,
            m2,
            energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumModel {
    alpha: C64,
    single_channel_m1: C64,
    channels: Vec<MediumChannel>,
}

impl MediumModel {
    pub fn new(alpha: C64, single_channel_m1: C64, channels: Vec<MediumChannel>) -> Result<Self> {
        for (i, ch) in channels.iter().enumerate() {
            if channels[..i].iter().any(|c| c.label == ch.label) {
                return Err(Error::InvalidMedium(format!(
                    "degenerate channel label `{}`",
                    ch.label
                )));
            }
            if !ch.energy.is_finite() {
                return Err(Error::InvalidMedium(format!(
                    "channel `{}` has non-finite energy",
                    ch.label
                )));
            }
        }
        Ok(Self {
            alpha,
            single_channel_m1,
            channels,
        })
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    /// `<M_1|M|M>` used at first order.
    pub fn single_channel_m1(&self) -> C64 {
        self.single_channel_m1
    }

    pub fn channels(&self) -> &[MediumChannel] {
        &self.channels
    }

    pub fn channel(&self, label: &str) -> Option<&MediumChannel> {
        self.channels.iter().find(|c| c.label == label)
    }

    /// Efficiency factor `(2 pi / hbar^2) |alpha <M_1|M|M>|^2`.
    pub fn efficiency_beta(&self, hbar: f64) -> f64 {
        2.0 * PI / (hbar * hbar) * (self.alpha * self.single_channel_m1).norm_sqr()
    }

    /// Energy above the ground state. Only `M` and the channels carry one;
    /// the final-state energy is fixed by the suppressed conservation delta.
    pub fn energy(&self, state: &MediumState) -> Result<f64> {
        match state {
            MediumState::Ground => Ok(0.0),
            MediumState::Channel(label) => self
                .channel(label)
                .map(|c| c.energy)
                .ok_or_else(|| Error::UnknownMediumState(label.clone())),
            other => Err(Error::Domain(format!("no energy modelled for {other}"))),
        }
    }

    /// `<to| M |from>` for the transitions the model knows about.
    pub fn element(&self, to: &MediumState, from: &MediumState) -> Result<C64> {
        let lookup = |label: &str| {
            self.channel(label)
                .ok_or_else(|| Error::UnknownMediumState(label.to_string()))
        };
        match (to, from) {
            (MediumState::Excited, MediumState::Ground) => Ok(self.single_channel_m1),
            (MediumState::Channel(l), MediumState::Ground) => Ok(lookup(l)?.m1),
            (MediumState::Doubly, MediumState::Channel(l)) => Ok(lookup(l)?.m2),
            _ => {
                if let MediumState::Channel(l) = to {
                    lookup(l)?;
                }
                if let MediumState::Channel(l) = from {
                    lookup(l)?;
                }
                Err(Error::NoMediumElement {
                    from: from.to_string(),
                    to: to.to_string(),
                })
            }
        }
    }
}

/// Named medium states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MediumState {
    /// `M`, energy origin.
    Ground,
    /// `M_1` as seen at first order.
    Excited,
    /// `M_1(i)` for the channel with this label.
    Channel(String),
    /// `M_2`
    Doubly,
}

impl MediumState {
    /// Parses `M`, `M_1`, `M_2`, or a channel label.
    pub fn parse(label: &str) -> Self {
        match label {
            "M" => MediumState::Ground,
            "M_1" => MediumState::Excited,
            "M_2" => MediumState::Doubly,
            other => MediumState::Channel(other.to_string()),
        }
    }
}

impl fmt::Display for MediumState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MediumState::Ground => write!(f, "M"),
            MediumState::Excited => write!(f, "M_1"),
            MediumState::Channel(l) => write!(f, "M_1({l})"),
            MediumState::Doubly => write!(f, "M_2"),
        }
    }
}

/// `m2 * m1 / denom`.
pub fn channel_weight(ch: &MediumChannel, denom: f64) -> Result<C64> {
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Resonance {
            channel: ch.label.clone(),
            denominator: denom,
        });
    }
    Ok(ch.m2 * ch.m1 / denom)
}
