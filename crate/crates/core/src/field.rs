//! Plane-wave modes on a periodic box, one-particle wavepackets, and the
//! Schrödinger field operator acting on Fock states.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockState, SlotKey, Statistics};

/// Allowed deviation of `sum |f(b)|^2` from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;

pub const DEFAULT_SPINS: u32 = 2;

/// Momentum modes `p = 2 pi hbar n / L` (per axis) on a periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    box_lengths: Vec<f64>,
    mode_indices: Vec<Vec<i64>>,
    momenta: Vec<Vec<f64>>,
    hbar: f64,
    mass: f64,
    spins: u32,
}

impl ModeBasis {
    /// Builds a basis from integer wave-number vectors, one per mode.
    pub fn new(
        box_lengths: Vec<f64>,
        mode_indices: Vec<Vec<i64>>,
        hbar: f64,
        mass: f64,
    ) -> Result<Self> {
        let dim = box_lengths.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidBasis(format!("dimension {dim} not in 1..=3")));
        }
        if box_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidBasis("box lengths must be positive".into()));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidBasis("hbar must be positive".into()));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidBasis("mass must be positive".into()));
        }
        if mode_indices.is_empty() {
            return Err(Error::InvalidBasis("at least one mode required".into()));
        }
        for (i, n) in mode_indices.iter().enumerate() {
            if n.len() != dim {
                return Err(Error::InvalidBasis(format!(
                    "mode {i} has {} components, expected {dim}",
                    n.len()
                )));
            }
            if mode_indices[..i].contains(n) {
                return Err(Error::InvalidBasis(format!("mode {i} duplicates {n:?}")));
            }
        }
        let momenta = mode_indices
            .iter()
            .map(|n| {
                n.iter()
                    .zip(&box_lengths)
                    .map(|(&k, &l)| 2.0 * PI * hbar * k as f64 / l)
                    .collect()
            })
            .collect();
        let basis = Self {
            box_lengths,
            mode_indices,
            momenta,
            hbar,
            mass,
            spins: DEFAULT_SPINS,
        };
        let defect = basis.orthonormality_defect(basis.exact_grid_points());
        if defect > ORTHONORMALITY_TOLERANCE {
            return Err(Error::InvalidBasis(format!(
                "plane waves not orthonormal on the box (defect {defect:e})"
            )));
        }
        Ok(basis)
    }

    /// The `count` modes of lowest kinetic energy, ties broken by the
    /// wave-number vector in lexicographic order.
    pub fn lowest_modes(box_lengths: Vec<f64>, count: usize, hbar: f64, mass: f64) -> Result<Self> {
        let dim = box_lengths.len();
        if count == 0 {
            return Err(Error::InvalidBasis("at least one mode required".into()));
        }
        if !(1..=3).contains(&dim) || box_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidBasis("bad box geometry".into()));
        }
        let k_sqr = |n: &[i64]| -> f64 {
            n.iter()
                .zip(&box_lengths)
                .map(|(&k, &l)| (k as f64 / l).powi(2))
                .sum()
        };
        let mut radius: i64 = 1;
        loop {
            let mut candidates = integer_box(dim, radius);
            candidates.sort_by(|a, b| k_sqr(a).total_cmp(&k_sqr(b)).then_with(|| a.cmp(b)));
            if candidates.len() >= count {
                let worst = k_sqr(&candidates[count - 1]);
                // Smallest |k|^2 of any vector outside the current cube.
                let outside = box_lengths
                    .iter()
                    .map(|l| ((radius + 1) as f64 / l).powi(2))
                    .fold(f64::INFINITY, f64::min);
                if worst < outside {
                    candidates.truncate(count);
                    return Self::new(box_lengths, candidates, hbar, mass);
                }
            }
            radius += 1;
        }
    }

    pub fn with_spins(mut self, spins: u32) -> Result<Self> {
        if spins == 0 {
            return Err(Error::InvalidBasis("spin set must be nonempty".into()));
        }
        self.spins = spins;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.box_lengths.len()
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    pub fn box_lengths(&self) -> &[f64] {
        &self.box_lengths
    }

    pub fn volume(&self) -> f64 {
        self.box_lengths.iter().product()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn spins(&self) -> u32 {
        self.spins
    }

    pub fn mode_indices(&self) -> &[Vec<i64>] {
        &self.mode_indices
    }

    pub fn momentum(&self, mode: usize) -> Result<&[f64]> {
        self.momenta
            .get(mode)
            .map(Vec::as_slice)
            .ok_or(Error::ModeOutOfRange {
                index: mode,
                len: self.len(),
            })
    }

    /// `p^2 / 2m` of one mode.
    pub fn kinetic_energy(&self, mode: usize) -> Result<f64> {
        let p = self.momentum(mode)?;
        Ok(p.iter().map(|x| x * x).sum::<f64>() / (2.0 * self.mass))
    }

    pub fn fock_space(&self) -> FockSpace {
        FockSpace::new(self.len(), self.spins)
    }

    pub fn check_spin(&self, spin: u32) -> Result<()> {
        if spin >= self.spins {
            return Err(Error::InvalidSpin {
                spin,
                spins: self.spins,
            });
        }
        Ok(())
    }

    /// Wraps raw coordinates into `[0, L)` on every axis.
    pub fn position(&self, coords: &[f64]) -> Result<Position> {
        if coords.len() != self.dim() {
            return Err(Error::Domain(format!(
                "position has {} components, basis is {}-dimensional",
                coords.len(),
                self.dim()
            )));
        }
        let mut wrapped = Vec::with_capacity(coords.len());
        for (&x, &l) in coords.iter().zip(&self.box_lengths) {
            if !x.is_finite() {
                return Err(Error::Domain(format!("non-finite position component {x}")));
            }
            let mut w = x.rem_euclid(l);
            // rem_euclid can round up to exactly l for tiny negative inputs
            if w >= l {
                w = 0.0;
            }
            wrapped.push(w);
        }
        Ok(Position(wrapped))
    }

    /// Plane wave `exp(i p.Q / hbar) / sqrt(V)`.
    pub fn mode_wavefunction(&self, mode: usize, q: &Position) -> Result<C64> {
        let p = self.momentum(mode)?;
        if q.0.len() != self.dim() {
            return Err(Error::Domain("position dimension mismatch".into()));
        }
        let phase: f64 = p.iter().zip(&q.0).map(|(pi, qi)| pi * qi).sum::<f64>() / self.hbar;
        Ok(C64::from_polar(1.0 / self.volume().sqrt(), phase))
    }

    /// All plane-wave values at `q`, indexed by mode.
    pub fn mode_values(&self, q: &Position) -> Result<Vec<C64>> {
        (0..self.len())
            .map(|m| self.mode_wavefunction(m, q))
            .collect()
    }

    /// Grid of `points_per_axis^dim` cell-corner positions covering the box.
    pub fn grid(&self, points_per_axis: usize) -> Vec<Position> {
        let n = points_per_axis.max(1);
        let mut out = vec![Vec::new()];
        for &l in &self.box_lengths {
            let h = l / n as f64;
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..n).map(move |i| {
                        let mut p = prefix.clone();
                        p.push(i as f64 * h);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(Position).collect()
    }

    /// Rectangle-rule integral over the box on a uniform periodic grid.
    /// Exact for trigonometric polynomials whose wave numbers stay below
    /// `points_per_axis`.
    pub fn box_quadrature<F: FnMut(&Position) -> f64>(&self, points_per_axis: usize, f: F) -> f64 {
        let grid = self.grid(points_per_axis);
        let cell = self.volume() / grid.len() as f64;
        grid.iter().map(f).sum::<f64>() * cell
    }

    /// Largest entry of `|G - I|` where `G` is the box-quadrature Gram matrix
    /// of the plane waves.
    pub fn orthonormality_defect(&self, points_per_axis: usize) -> f64 {
        let grid = self.grid(points_per_axis);
        let cell = self.volume() / grid.len() as f64;
        let values: Vec<Vec<C64>> = grid
            .iter()
            .map(|q| self.mode_values(q).expect("grid positions match the basis"))
            .collect();
        let mut worst: f64 = 0.0;
        for a in 0..self.len() {
            for b in a..self.len() {
                let g: C64 = values.iter().map(|v| v[a].conj() * v[b]).sum::<C64>() * cell;
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    /// Grid size for which the periodic rectangle rule integrates products of
    /// any two modes exactly.
    pub fn exact_grid_points(&self) -> usize {
        let max_n = self
            .mode_indices
            .iter()
            .flat_map(|n| n.iter().map(|k| k.unsigned_abs()))
            .max()
            .unwrap_or(0) as usize;
        2 * max_n + 2
    }
}

fn integer_box(dim: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<i64>| {
                (-radius..=radius).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

/// Detector location, wrapped into the box.
#[derive(Debug, Clone, PartialEq)]
pub struct Position(Vec<f64>);

impl Position {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Normalized momentum distribution `f(b)` over the modes of a basis, with a spin label.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavepacket {
    basis: Arc<ModeBasis>,
    amplitudes: Vec<C64>,
    spin: u32,
}

impl Wavepacket {
    pub fn new(basis: Arc<ModeBasis>, amplitudes: Vec<C64>, spin: u32) -> Result<Self> {
        let wp = Self::unchecked(basis, amplitudes, spin)?;
        let norm_sqr = wp.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(wp)
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(basis: Arc<ModeBasis>, amplitudes: Vec<C64>, spin: u32) -> Result<Self> {
        let mut wp = Self::unchecked(basis, amplitudes, spin)?;
        let norm = wp.norm_sqr().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized {
                norm_sqr: norm * norm,
            });
        }
        for a in &mut wp.amplitudes {
            *a /= norm;
        }
        Ok(wp)
    }

    pub fn single_mode(basis: Arc<ModeBasis>, mode: usize, spin: u32) -> Result<Self> {
        if mode >= basis.len() {
            return Err(Error::ModeOutOfRange {
                index: mode,
                len: basis.len(),
            });
        }
        let mut amplitudes = vec![C64::default(); basis.len()];
        amplitudes[mode] = C64::new(1.0, 0.0);
        Self::new(basis, amplitudes, spin)
    }

    fn unchecked(basis: Arc<ModeBasis>, amplitudes: Vec<C64>, spin: u32) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::Domain(format!(
                "{} amplitudes for a basis of {} modes",
                amplitudes.len(),
                basis.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|a| !(a.re.is_finite() && a.im.is_finite()))
        {
            return Err(Error::Domain("non-finite wavepacket amplitude".into()));
        }
        basis.check_spin(spin)?;
        Ok(Self {
            basis,
            amplitudes,
            spin,
        })
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn spin(&self) -> u32 {
        self.spin
    }

    fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Modes carrying nonzero amplitude.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(i, _)| i)
    }

    pub fn is_sharp(&self) -> bool {
        self.support().count() == 1
    }

    /// Spread of kinetic energies over the packet's support; zero when every
    /// populated mode has the same `p^2 / 2m`.
    pub fn energy_spread(&self) -> f64 {
        let (lo, hi) = self
            .support()
            .map(|m| {
                self.basis
                    .kinetic_energy(m)
                    .expect("support lies in the basis")
            })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
                (lo.min(e), hi.max(e))
            });
        if lo.is_finite() {
            hi - lo
        } else {
            0.0
        }
    }

    /// First-quantized wavefunction `psi_f(Q) = sum_b f(b) psi_b(Q)`.
    pub fn position_amplitude(&self, q: &Position) -> Result<C64> {
        let mut sum = C64::default();
        for (mode, a) in self.amplitudes.iter().enumerate() {
            if a.norm() > 0.0 {
                sum += a * self.basis.mode_wavefunction(mode, q)?;
            }
        }
        Ok(sum)
    }

    /// `<self|other> = sum_b conj(f_b) g_b`. Spin labels are not included.
    pub fn overlap(&self, other: &Wavepacket) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(f, g)| f.conj() * g)
            .sum())
    }

    /// `sum_b |f(b)|^2 p_b^2 / 2m`.
    pub fn mean_kinetic_energy(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(m, a)| a.norm_sqr() * self.basis.kinetic_energy(m).expect("mode in range"))
            .sum()
    }

    /// Same packet multiplied by `exp(i theta)`.
    pub fn with_phase(&self, theta: f64) -> Self {
        let phase = C64::from_polar(1.0, theta);
        Self {
            basis: self.basis.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
            spin: self.spin,
        }
    }
}

/// Lowering field operator `psi_spin(Q) = sum_q psi_q(Q) a_(q, spin)`.
pub fn field_annihilate(
    state: &FockState,
    basis: &ModeBasis,
    q: &Position,
    spin: u32,
) -> Result<FockState> {
    basis.check_spin(spin)?;
    let mut out = FockState::zero(state.space(), state.statistics());
    for mode in 0..basis.len() {
        let lowered = state.annihilate(SlotKey::new(mode, spin))?;
        if !lowered.is_zero() {
            out = out.add_scaled(&lowered, basis.mode_wavefunction(mode, q)?)?;
        }
    }
    Ok(out)
}

/// Raising field operator, the adjoint of [`field_annihilate`].
pub fn field_create(
    state: &FockState,
    basis: &ModeBasis,
    q: &Position,
    spin: u32,
) -> Result<FockState> {
    basis.check_spin(spin)?;
    let mut out = FockState::zero(state.space(), state.statistics());
    for mode in 0..basis.len() {
        let raised = state.create(SlotKey::new(mode, spin))?;
        if !raised.is_zero() {
            out = out.add_scaled(&raised, basis.mode_wavefunction(mode, q)?.conj())?;
        }
    }
    Ok(out)
}

/// Applies the packet creation operator `sum_b f(b) a^+_(b, spin)` to `state`.
pub fn create_packet(state: &FockState, wp: &Wavepacket) -> Result<FockState> {
    let space = state.space();
    if space.modes != wp.basis.len() || space.spins != wp.basis.spins() {
        return Err(Error::BasisMismatch);
    }
    let mut out = FockState::zero(state.space(), state.statistics());
    for (mode, a) in wp.amplitudes.iter().enumerate() {
        if a.norm() > 0.0 {
            let raised = state.create(SlotKey::new(mode, wp.spin))?;
            out = out.add_scaled(&raised, *a)?;
        }
    }
    Ok(out)
}

/// One-particle state `|1_f> = sum_b f(b) a^+_b |0>`.
pub fn packet_state(wp: &Wavepacket, statistics: Statistics) -> Result<FockState> {
    create_packet(&FockState::vacuum(wp.basis.fock_space(), statistics), wp)
}

/// Two-particle state `A^+_f A^+_g |0>`: `g` is created first.
pub fn pair_state(f: &Wavepacket, g: &Wavepacket, statistics: Statistics) -> Result<FockState> {
    if f.basis != g.basis {
        return Err(Error::BasisMismatch);
    }
    create_packet(&packet_state(g, statistics)?, f)
}
