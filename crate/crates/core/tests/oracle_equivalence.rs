mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use fockrate::field::{packet_state, pair_state};
use fockrate::fock::Statistics;
use fockrate::oracle::{
    check_trial, sample_trial, verify_closed_forms, CompositeState, Oracle, PacketKind, TrialStatus,
};
use fockrate::perturbation::rate_second_order;
use fockrate::{ModeBasis, TwoParticleInput, Wavepacket};

#[test]
fn resolved_identity_matches_direct_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let basis = line(&[-2, -1, 0, 1]);
    let model = two_channel_model();
    let oracle = Oracle::new(&basis, &model);
    for stats in [Statistics::Bose, Statistics::Fermi] {
        for _ in 0..10 {
            let f = random_packet(&mut rng, &basis, 0);
            let g = random_packet(&mut rng, &basis, 0);
            let particle = pair_state(&f, &g, stats).unwrap();
            for x in [0.3, 2.9, 5.1] {
                let q = basis.position(&[x]).unwrap();
                let resolved = oracle.resolved_two_step(&particle, &q, 0).unwrap();
                let direct = oracle.direct_two_step(&particle, &q, 0).unwrap();
                assert!((resolved - direct).norm() < 1e-12, "{resolved} vs {direct}");
            }
        }
    }
}

#[test]
fn mode_relabeling_changes_no_rate() {
    let modes = [-1i64, 0, 1, 2];
    let order = [3usize, 1, 0, 2];
    let mk = |ns: &[i64]| {
        Arc::new(
            ModeBasis::new(vec![5.0], ns.iter().map(|&n| vec![n]).collect(), 0.9, 1.4).unwrap(),
        )
    };
    let basis = mk(&modes);
    let permuted_modes: Vec<i64> = order.iter().map(|&i| modes[i]).collect();
    let permuted = mk(&permuted_modes);
    let model = two_channel_model();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for stats in [Statistics::Bose, Statistics::Fermi] {
        for _ in 0..5 {
            let f = random_packet(&mut rng, &basis, 0);
            let g = random_packet(&mut rng, &basis, 1);
            let relabel = |wp: &Wavepacket| {
                let amps: Vec<C64> = order.iter().map(|&i| wp.amplitudes()[i]).collect();
                Wavepacket::new(permuted.clone(), amps, wp.spin()).unwrap()
            };
            let (fp, gp) = (relabel(&f), relabel(&g));
            for x in [0.4, 1.7, 3.3] {
                for omega in [0, 1] {
                    let a = Oracle::new(&basis, &model)
                        .second_order_rate(
                            &CompositeState::ground(pair_state(&f, &g, stats).unwrap()),
                            &basis.position(&[x]).unwrap(),
                            omega,
                        )
                        .unwrap();
                    let b = Oracle::new(&permuted, &model)
                        .second_order_rate(
                            &CompositeState::ground(pair_state(&fp, &gp, stats).unwrap()),
                            &permuted.position(&[x]).unwrap(),
                            omega,
                        )
                        .unwrap();
                    assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn same_state_boson_oracle_constant() {
    let basis = line(&[0]);
    let model = unit_channel_model(-1.0);
    let wp = Wavepacket::single_mode(basis.clone(), 0, 0).unwrap();
    let initial = CompositeState::ground(pair_state(&wp, &wp, Statistics::Bose).unwrap());
    for x in [0.0, 1.0, 4.0] {
        let q = basis.position(&[x]).unwrap();
        let oracle = Oracle::new(&basis, &model)
            .second_order_rate(&initial, &q, 0)
            .unwrap();
        assert!((oracle - 2.0 / PI).abs() < 1e-12);
        let input = TwoParticleInput::new(wp.clone(), wp.clone(), 0, Statistics::Bose).unwrap();
        let closed = rate_second_order(&input, &q, &model).unwrap().value;
        assert!((closed - oracle).abs() < 1e-12);
    }
}

#[test]
fn degenerate_packets_agree_with_oracle() {
    for seed in 0..60 {
        let trial = sample_trial(seed, PacketKind::Degenerate);
        let [first, second] = check_trial(&trial, 1e-10).unwrap();
        assert_eq!(first.status, TrialStatus::Pass, "{first}");
        assert_eq!(second.status, TrialStatus::Pass, "{second}");
    }
}

#[test]
fn spread_packets_never_fail_outright() {
    for seed in 0..60 {
        let trial = sample_trial(seed, PacketKind::Spread);
        let [first, second] = check_trial(&trial, 1e-10).unwrap();
        assert_eq!(first.status, TrialStatus::Pass, "{first}");
        assert_ne!(second.status, TrialStatus::Fail, "{second}");
    }
}

#[test]
fn first_order_oracle_on_single_packets() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let basis = line(&[-2, -1, 0, 1, 2]);
    let model = two_channel_model();
    let oracle = Oracle::new(&basis, &model);
    for stats in [Statistics::Bose, Statistics::Fermi] {
        let wp = random_packet(&mut rng, &basis, 1);
        let initial = CompositeState::ground(packet_state(&wp, stats).unwrap());
        for x in [0.2, 3.0] {
            let q = basis.position(&[x]).unwrap();
            let expected = fockrate::perturbation::rate_first_order(&wp, 1, &q, &model)
                .unwrap()
                .value;
            let got = oracle.first_order_rate(&initial, &q, 1).unwrap();
            assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
            assert_eq!(oracle.first_order_rate(&initial, &q, 0).unwrap(), 0.0);
        }
    }
}

#[test]
fn verification_report_is_reproducible() {
    let a = verify_closed_forms(12, 1e-10, 99);
    let b = verify_closed_forms(12, 1e-10, 99);
    assert_eq!(a.to_string(), b.to_string());
    assert!(a.passed());
}
