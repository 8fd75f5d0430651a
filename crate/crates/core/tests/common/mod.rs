#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::Rng;

use fockrate::fock::{FockSpace, FockState, OccupationKet, SlotKey, Statistics};
use fockrate::{MediumChannel, MediumModel, ModeBasis, Wavepacket};

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// 1D box of length 2 pi, hbar = m = 1.
pub fn line(modes: &[i64]) -> Arc<ModeBasis> {
    let indices = modes.iter().map(|&n| vec![n]).collect();
    Arc::new(ModeBasis::new(vec![2.0 * PI], indices, 1.0, 1.0).unwrap())
}

/// `cos(Q) / sqrt(pi)` on the `p = -1, +1` basis.
pub fn cos_packet(basis: &Arc<ModeBasis>, spin: u32) -> Wavepacket {
    let a = c(std::f64::consts::FRAC_1_SQRT_2);
    Wavepacket::new(basis.clone(), vec![a, a], spin).unwrap()
}

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_packet<R: Rng>(rng: &mut R, basis: &Arc<ModeBasis>, spin: u32) -> Wavepacket {
    let amps = (0..basis.len()).map(|_| random_complex(rng)).collect();
    Wavepacket::normalized(basis.clone(), amps, spin).unwrap()
}

pub fn unit_channel_model(energy: f64) -> MediumModel {
    MediumModel::new(
        c(1.0),
        c(1.0),
        vec![MediumChannel::new("a", c(1.0), c(1.0), energy)],
    )
    .unwrap()
}

pub fn two_channel_model() -> MediumModel {
    MediumModel::new(
        C64::new(0.6, -0.4),
        C64::new(1.2, 0.3),
        vec![
            MediumChannel::new("a", C64::new(0.8, 0.1), C64::new(-0.5, 1.1), 2.3),
            MediumChannel::new("b", C64::new(0.3, -0.9), c(1.4), 3.1),
        ],
    )
    .unwrap()
}

/// Random superposition of up to `terms` kets on `space`, with at most
/// `max_occ` particles per slot (1 for fermions).
pub fn random_state<R: Rng>(
    rng: &mut R,
    space: FockSpace,
    statistics: Statistics,
    terms: usize,
    max_occ: u32,
) -> FockState {
    let limit = match statistics {
        Statistics::Bose => max_occ,
        Statistics::Fermi => 1,
    };
    let mut state = FockState::zero(space, statistics);
    while state.is_zero() {
        for _ in 0..terms {
            let ket = OccupationKet::from_occupations(
                space
                    .slots()
                    .map(|s| (s, rng.random_range(0..=limit)))
                    .collect::<Vec<(SlotKey, u32)>>(),
            );
            let term = FockState::from_ket(space, statistics, ket, random_complex(rng)).unwrap();
            state = state.add(&term).unwrap();
        }
    }
    state
}
