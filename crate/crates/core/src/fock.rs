//! Sparse occupation-number states with bosonic and fermionic ladder operators.
//!
//! Slots are ordered mode-major, then by spin. Fermionic signs come from
//! counting occupied slots that precede the target slot in that order.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes below this magnitude are dropped from a state.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Default per-slot occupation limit for bosons.
pub const DEFAULT_OCCUPATION_CAP: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Bose,
    Fermi,
}

impl Statistics {
    /// +1 for bosons, -1 for fermions: the sign picked up when two particles swap.
    pub fn exchange_sign(self) -> f64 {
        match self {
            Statistics::Bose => 1.0,
            Statistics::Fermi => -1.0,
        }
    }
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistics::Bose => write!(f, "bose"),
            Statistics::Fermi => write!(f, "fermi"),
        }
    }
}

/// A single-particle slot: momentum mode index plus spin label.
///
/// The derived ordering compares `mode` first, which gives the canonical
/// mode-major order used for fermionic signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotKey {
    pub mode: usize,
    pub spin: u32,
}

impl SlotKey {
    pub fn new(mode: usize, spin: u32) -> Self {
        Self { mode, spin }
    }
}

/// Shape of the truncated Fock space: how many modes, spins, and how many
/// bosons one slot may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub modes: usize,
    pub spins: u32,
    pub cap: u32,
}

impl FockSpace {
    pub fn new(modes: usize, spins: u32) -> Self {
        Self {
            modes,
            spins,
            cap: DEFAULT_OCCUPATION_CAP,
        }
    }

    pub fn with_cap(mut self, cap: u32) -> Self {
        self.cap = cap;
        self
    }

    pub fn validate(&self, slot: SlotKey) -> Result<()> {
        if slot.mode >= self.modes || slot.spin >= self.spins {
            return Err(Error::InvalidSlot {
                slot,
                modes: self.modes,
                spins: self.spins,
            });
        }
        Ok(())
    }

    /// All slots in canonical order.
    pub fn slots(&self) -> impl Iterator<Item = SlotKey> + '_ {
        (0..self.modes)
            .flat_map(move |mode| (0..self.spins).map(move |spin| SlotKey { mode, spin }))
    }
}

/// Occupation numbers per slot. Empty slots are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccupationKet(BTreeMap<SlotKey, u32>);

impl OccupationKet {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn from_occupations<I: IntoIterator<Item = (SlotKey, u32)>>(occupations: I) -> Self {
        let mut map = BTreeMap::new();
        for (slot, n) in occupations {
            if n > 0 {
                *map.entry(slot).or_insert(0) += n;
            }
        }
        Self(map)
    }

    pub fn occupation(&self, slot: SlotKey) -> u32 {
        self.0.get(&slot).copied().unwrap_or(0)
    }

    pub fn particle_count(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SlotKey, u32)> + '_ {
        self.0.iter().map(|(s, n)| (*s, *n))
    }

    /// Number of particles sitting in slots strictly before `slot`.
    fn particles_before(&self, slot: SlotKey) -> u32 {
        self.0.range(..slot).map(|(_, n)| *n).sum()
    }

    fn with_occupation(&self, slot: SlotKey, n: u32) -> Self {
        let mut map = self.0.clone();
        if n == 0 {
            map.remove(&slot);
        } else {
            map.insert(slot, n);
        }
        Self(map)
    }
}

impl fmt::Display for OccupationKet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, (slot, n)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}:{}^{}", slot.mode, slot.spin, n)?;
        }
        write!(f, ">")
    }
}

/// A superposition of occupation kets with one fixed statistics.
///
/// The zero state (no terms) is distinct from the vacuum (empty ket with
/// amplitude 1).
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    space: FockSpace,
    statistics: Statistics,
    terms: BTreeMap<OccupationKet, C64>,
}

impl FockState {
    pub fn zero(space: FockSpace, statistics: Statistics) -> Self {
        Self {
            space,
            statistics,
            terms: BTreeMap::new(),
        }
    }

    pub fn vacuum(space: FockSpace, statistics: Statistics) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(OccupationKet::vacuum(), C64::new(1.0, 0.0));
        Self {
            space,
            statistics,
            terms,
        }
    }

    /// A single ket with the given amplitude, validated against the space.
    pub fn from_ket(
        space: FockSpace,
        statistics: Statistics,
        ket: OccupationKet,
        amplitude: C64,
    ) -> Result<Self> {
        for (slot, n) in ket.iter() {
            space.validate(slot)?;
            let limit = match statistics {
                Statistics::Bose => space.cap,
                Statistics::Fermi => 1,
            };
            if n > limit {
                return Err(Error::OccupationCap { slot, cap: limit });
            }
        }
        let mut state = Self::zero(space, statistics);
        state.accumulate(ket, amplitude);
        state.prune();
        Ok(state)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OccupationKet, C64)> + '_ {
        self.terms.iter().map(|(k, a)| (k, *a))
    }

    pub fn amplitude(&self, ket: &OccupationKet) -> C64 {
        self.terms.get(ket).copied().unwrap_or_default()
    }

    /// Raising operator on one slot.
    pub fn create(&self, slot: SlotKey) -> Result<Self> {
        self.space.validate(slot)?;
        let mut out = Self::zero(self.space, self.statistics);
        for (ket, amp) in &self.terms {
            let n = ket.occupation(slot);
            let factor = match self.statistics {
                Statistics::Bose => {
                    if n >= self.space.cap {
                        return Err(Error::OccupationCap {
                            slot,
                            cap: self.space.cap,
                        });
                    }
                    ((n + 1) as f64).sqrt()
                }
                Statistics::Fermi => {
                    if n > 0 {
                        continue;
                    }
                    fermi_sign(ket.particles_before(slot))
                }
            };
            out.accumulate(ket.with_occupation(slot, n + 1), amp * factor);
        }
        out.prune();
        Ok(out)
    }

    /// Lowering operator on one slot.
    pub fn annihilate(&self, slot: SlotKey) -> Result<Self> {
        self.space.validate(slot)?;
        let mut out = Self::zero(self.space, self.statistics);
        for (ket, amp) in &self.terms {
            let n = ket.occupation(slot);
            if n == 0 {
                continue;
            }
            let factor = match self.statistics {
                Statistics::Bose => (n as f64).sqrt(),
                Statistics::Fermi => fermi_sign(ket.particles_before(slot)),
            };
            out.accumulate(ket.with_occupation(slot, n - 1), amp * factor);
        }
        out.prune();
        Ok(out)
    }

    /// `<self|ket>`, conjugate-linear in `self`.
    pub fn inner_product(&self, ket: &FockState) -> Result<C64> {
        self.check_compatible(ket)?;
        let (small, large, conj_small) = if self.terms.len() <= ket.terms.len() {
            (&self.terms, &ket.terms, true)
        } else {
            (&ket.terms, &self.terms, false)
        };
        let mut sum = C64::default();
        for (k, a) in small {
            if let Some(b) = large.get(k) {
                sum += if conj_small {
                    a.conj() * b
                } else {
                    b.conj() * a
                };
            }
        }
        Ok(sum)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = Self::zero(self.space, self.statistics);
        for (ket, amp) in &self.terms {
            out.accumulate(ket.clone(), amp * factor);
        }
        out.prune();
        out
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &FockState, factor: C64) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (ket, amp) in &other.terms {
            out.accumulate(ket.clone(), amp * factor);
        }
        out.prune();
        Ok(out)
    }

    pub fn add(&self, other: &FockState) -> Result<Self> {
        self.add_scaled(other, C64::new(1.0, 0.0))
    }

    fn check_compatible(&self, other: &FockState) -> Result<()> {
        if self.statistics != other.statistics || self.space != other.space {
            return Err(Error::StatisticsMismatch);
        }
        Ok(())
    }

    fn accumulate(&mut self, ket: OccupationKet, amp: C64) {
        *self.terms.entry(ket).or_default() += amp;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (ket, amp)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i){}", amp.re, amp.im, ket)?;
        }
        Ok(())
    }
}

fn fermi_sign(preceding: u32) -> f64 {
    if preceding.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Expectation value of the (anti)commutator `a_a a_b^+ -/+ a_b^+ a_a` in `probe`.
///
/// For a consistent representation this equals the Kronecker delta of the
/// two slots for every probe.
pub fn check_commutation(
    slot_a: SlotKey,
    slot_b: SlotKey,
    statistics: Statistics,
    probe: &FockState,
) -> Result<C64> {
    if probe.statistics() != statistics {
        return Err(Error::StatisticsMismatch);
    }
    let norm = probe.norm_sqr();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let forward = probe.create(slot_b)?.annihilate(slot_a)?;
    let reverse = probe.annihilate(slot_a)?.create(slot_b)?;
    let sign = statistics.exchange_sign();
    let bracket = forward.add_scaled(&reverse, C64::new(-sign, 0.0))?;
    Ok(probe.inner_product(&bracket)? / norm)
}
