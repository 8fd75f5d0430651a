mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use fockrate::field::{field_annihilate, packet_state, pair_state};
use fockrate::fock::{check_commutation, FockSpace, FockState, SlotKey, Statistics};
use fockrate::perturbation::{rate_first_order, rate_second_order};
use fockrate::{ModeBasis, TwoParticleInput};

fn statistics() -> impl Strategy<Value = Statistics> {
    prop_oneof![Just(Statistics::Bose), Just(Statistics::Fermi)]
}

fn slot() -> impl Strategy<Value = SlotKey> {
    (0usize..2, 0u32..2).prop_map(|(m, s)| SlotKey::new(m, s))
}

const SPACE: FockSpace = FockSpace {
    modes: 2,
    spins: 2,
    cap: 4,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_exclusion(seed in any::<u64>(), s in slot()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_state(&mut rng, SPACE, Statistics::Fermi, 3, 1);
        prop_assert!(x.create(s).unwrap().create(s).unwrap().is_zero());
    }

    #[test]
    fn create_is_adjoint_of_annihilate(seed in any::<u64>(), s in slot(), stats in statistics()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_state(&mut rng, SPACE, stats, 3, 2);
        let y = random_state(&mut rng, SPACE, stats, 3, 2);
        let lhs = x.create(s).unwrap().inner_product(&y).unwrap();
        let rhs = x.inner_product(&y.annihilate(s).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn operators_are_linear(seed in any::<u64>(), s in slot(), stats in statistics(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_state(&mut rng, SPACE, stats, 3, 2);
        let y = random_state(&mut rng, SPACE, stats, 3, 2);
        let k = C64::new(re, im);
        let combo = x.add_scaled(&y, k).unwrap();
        for (lhs, rhs) in [
            (combo.create(s).unwrap(), x.create(s).unwrap().add_scaled(&y.create(s).unwrap(), k).unwrap()),
            (combo.annihilate(s).unwrap(), x.annihilate(s).unwrap().add_scaled(&y.annihilate(s).unwrap(), k).unwrap()),
        ] {
            let diff = lhs.add_scaled(&rhs, C64::new(-1.0, 0.0)).unwrap();
            prop_assert!(diff.norm_sqr().sqrt() < 1e-12);
        }
    }

    #[test]
    fn commutator_is_kronecker_delta(seed in any::<u64>(), a in slot(), b in slot(), stats in statistics()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probe = random_state(&mut rng, SPACE, stats, 3, 2);
        let value = check_commutation(a, b, stats, &probe).unwrap();
        let expected = if a == b { 1.0 } else { 0.0 };
        prop_assert!((value - C64::new(expected, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn packet_states_are_normalized(seed in any::<u64>(), stats in statistics(), spin in 0u32..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = line(&[-2, -1, 0, 1, 2]);
        let wp = random_packet(&mut rng, &basis, spin);
        prop_assert!((packet_state(&wp, stats).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_obeys_cauchy_schwarz(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = line(&[-2, -1, 0, 1, 2]);
        let f = random_packet(&mut rng, &basis, 0);
        let g = random_packet(&mut rng, &basis, 0);
        prop_assert!((f.overlap(&f).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(f.overlap(&g).unwrap().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn vacuum_projection_recovers_wavefunction(seed in any::<u64>(), x in 0.0..(2.0 * PI), spin in 0u32..2, omega in 0u32..2, stats in statistics()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = line(&[-2, -1, 0, 1, 2]);
        let wp = random_packet(&mut rng, &basis, spin);
        let q = basis.position(&[x]).unwrap();
        let one = packet_state(&wp, stats).unwrap();
        let vac = FockState::vacuum(one.space(), stats);
        let got = vac.inner_product(&field_annihilate(&one, &basis, &q, omega).unwrap()).unwrap();
        let expected = if spin == omega { wp.position_amplitude(&q).unwrap() } else { C64::new(0.0, 0.0) };
        prop_assert!((got - expected).norm() < 1e-12);
    }

    #[test]
    fn global_phase_leaves_rates_unchanged(seed in any::<u64>(), theta in 0.0..(2.0 * PI), x in 0.0..(2.0 * PI), stats in statistics()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = line(&[-1, 1, 2]);
        let f = random_packet(&mut rng, &basis, 0);
        let g = random_packet(&mut rng, &basis, 0);
        let model = two_channel_model();
        let q = basis.position(&[x]).unwrap();
        let w1 = rate_first_order(&f, 0, &q, &model).unwrap().value;
        let w1p = rate_first_order(&f.with_phase(theta), 0, &q, &model).unwrap().value;
        prop_assert!((w1 - w1p).abs() <= 1e-12 * w1.max(1.0));
        let w2 = rate_second_order(&TwoParticleInput::new(f.clone(), g.clone(), 0, stats).unwrap(), &q, &model).unwrap().value;
        let w2p = rate_second_order(&TwoParticleInput::new(f.with_phase(theta), g, 0, stats).unwrap(), &q, &model).unwrap().value;
        prop_assert!((w2 - w2p).abs() <= 1e-12 * w2.max(1.0));
    }

    #[test]
    fn spin_selection(seed in any::<u64>(), x in 0.0..(2.0 * PI), stats in statistics()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = Arc::new(ModeBasis::clone(&line(&[-1, 0, 1])).with_spins(3).unwrap());
        let f = random_packet(&mut rng, &basis, 1);
        let g = random_packet(&mut rng, &basis, 2);
        let q = basis.position(&[x]).unwrap();
        let input = TwoParticleInput::new(f, g, 0, stats).unwrap();
        prop_assert_eq!(rate_second_order(&input, &q, &two_channel_model()).unwrap().value, 0.0);
    }

    #[test]
    fn same_state_bosons_follow_fourth_power(seed in any::<u64>(), x1 in 0.0..(2.0 * PI), x2 in 0.0..(2.0 * PI)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = line(&[-2, -1, 0, 1, 2]);
        let f = random_packet(&mut rng, &basis, 0);
        let input = TwoParticleInput::new(f.clone(), f.clone(), 0, Statistics::Bose).unwrap();
        let model = unit_channel_model(-1.0);
        let q1 = basis.position(&[x1]).unwrap();
        let q2 = basis.position(&[x2]).unwrap();
        let a1 = f.position_amplitude(&q1).unwrap().norm();
        let a2 = f.position_amplitude(&q2).unwrap().norm();
        prop_assume!(a1 > 1e-3 && a2 > 1e-3);
        let w1 = rate_second_order(&input, &q1, &model).unwrap().value;
        let w2 = rate_second_order(&input, &q2, &model).unwrap().value;
        let law = (a1 / a2).powi(4);
        prop_assert!((w1 / w2 - law).abs() <= 1e-10 * law);
    }

    #[test]
    fn orthogonal_packets_follow_product_law(seed in any::<u64>(), xs in proptest::collection::vec(0.0..(2.0 * PI), 10), stats in statistics()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let left = line(&[-2, -1, 0, 1, 2]);
        let f_amps = vec![random_complex(&mut rng), random_complex(&mut rng), c(0.0), c(0.0), c(0.0)];
        let g_amps = vec![c(0.0), c(0.0), c(0.0), random_complex(&mut rng), random_complex(&mut rng)];
        let f = fockrate::Wavepacket::normalized(left.clone(), f_amps, 0).unwrap();
        let g = fockrate::Wavepacket::normalized(left.clone(), g_amps, 0).unwrap();
        let input = TwoParticleInput::new(f.clone(), g.clone(), 0, stats).unwrap();
        let model = two_channel_model();
        let mut ratios = Vec::new();
        for x in xs {
            let q = left.position(&[x]).unwrap();
            let pf = f.position_amplitude(&q).unwrap().norm_sqr();
            let pg = g.position_amplitude(&q).unwrap().norm_sqr();
            if pf * pg < 1e-6 {
                continue;
            }
            ratios.push(rate_second_order(&input, &q, &model).unwrap().value / (pf * pg));
        }
        for r in &ratios {
            prop_assert!((r - ratios[0]).abs() <= 1e-10 * ratios[0].abs().max(1e-300));
        }
    }

    #[test]
    fn pair_state_has_unit_norm_for_orthogonal_packets(seed in any::<u64>(), stats in statistics()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = line(&[-1, 0, 1]);
        let f = fockrate::Wavepacket::normalized(basis.clone(), vec![random_complex(&mut rng), c(0.0), c(0.0)], 0).unwrap();
        let g = fockrate::Wavepacket::normalized(basis.clone(), vec![c(0.0), random_complex(&mut rng), random_complex(&mut rng)], 1).unwrap();
        prop_assert!((pair_state(&f, &g, stats).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn plane_waves_orthonormal_on_grid() {
    let basis = ModeBasis::lowest_modes(vec![3.7], 6, 0.8, 1.3).unwrap();
    assert!(basis.orthonormality_defect(basis.exact_grid_points()) < 1e-8);
    let square = ModeBasis::lowest_modes(vec![2.0, 5.0], 6, 1.0, 1.0).unwrap();
    assert!(square.orthonormality_defect(square.exact_grid_points()) < 1e-8);
}
