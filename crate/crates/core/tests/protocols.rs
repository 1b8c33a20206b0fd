//! Monte-Carlo protocol behaviour against the oracle.

mod common;

use ghz_qkd::channel::{ChannelId, ChannelModel, EveStrategy, GuessPolicy};
use ghz_qkd::key::Verdict;
use ghz_qkd::protocol::{run_protocol, ProtocolKind, ProtocolSetup};
use ghz_qkd::quantum::Basis;

fn sigma3(p: f64, n: f64) -> f64 {
    3.0 * (p * (1.0 - p) / n).sqrt()
}

#[test]
fn ideal_runs_agree_end_to_end() {
    for kind in ProtocolKind::ALL {
        let t = run_protocol(&ProtocolSetup::ideal(kind, 10_000, 77)).unwrap();
        assert_eq!(t.keys.alice_bits, *t.keys.bob_final(), "{kind}");
        assert_eq!(t.detection.verdict, Verdict::Clean);
        let kept = t.keys.len() as f64 / 10_000.0;
        assert!((kept - 0.5).abs() <= sigma3(0.5, 10_000.0), "{kind}: {kept}");
    }
}

#[test]
fn mks_master_role_is_uniform() {
    let t = run_protocol(&ProtocolSetup::ideal(ProtocolKind::MksQkd, 20_000, 3)).unwrap();
    let ch2 = t.rounds.iter().filter(|r| r.master_channel == Some(ChannelId(2))).count() as f64 / 20_000.0;
    assert!((ch2 - 0.5).abs() <= sigma3(0.5, 20_000.0), "{ch2}");
}

#[test]
fn bb84_intercept_resend_disagreement() {
    let eve = EveStrategy::InterceptResendRandomBasis { targets: None };
    let mut kept = 0usize;
    let mut diff = 0usize;
    let mut trial = 0;
    while kept < 100_000 {
        let setup = ProtocolSetup::ideal(ProtocolKind::Bb84Eckert, 50_000, 11)
            .with_eve(eve.clone())
            .with_trial(trial);
        let t = run_protocol(&setup).unwrap();
        kept += t.keys.len();
        diff += t.keys.alice_bits.hamming_distance(t.keys.bob_final()).unwrap();
        trial += 1;
    }
    let rate = diff as f64 / kept as f64;
    assert!((rate - common::BB84_INTERCEPT_QBER).abs() <= 0.01, "{rate}");
}

#[test]
fn mks_guess_policies_match_oracle() {
    let cases = [
        (GuessPolicy::UniformRandom, common::MKS_MISMATCH_UNIFORM),
        (GuessPolicy::FixedChannel2, common::MKS_MISMATCH_CH2),
        (GuessPolicy::FixedChannel3, common::MKS_MISMATCH_CH3),
        (GuessPolicy::OracleCorrect, common::MKS_MISMATCH_ORACLE),
    ];
    for (policy, expected) in cases {
        let setup = ProtocolSetup::ideal(ProtocolKind::MksQkd, 60_000, 19)
            .with_eve(EveStrategy::XMeasureGuessedMaster(policy));
        let t = run_protocol(&setup).unwrap();
        let rate = t.keys.alice_bits.hamming_distance(t.keys.bob_final()).unwrap() as f64 / t.keys.len() as f64;
        assert!((rate - expected).abs() <= 0.01, "{policy:?}: {rate}");
        if policy == GuessPolicy::OracleCorrect {
            assert_eq!(rate, 0.0);
            assert_eq!(t.detection.verdict, Verdict::Clean);
        }
    }
}

#[test]
fn mks_wrong_guess_breaks_z_rounds_only() {
    let setup = ProtocolSetup::ideal(ProtocolKind::MksQkd, 40_000, 23)
        .with_eve(EveStrategy::XMeasureGuessedMaster(GuessPolicy::UniformRandom));
    let t = run_protocol(&setup).unwrap();
    let (mut z_wrong, mut z_agree) = (0usize, 0usize);
    for r in t.kept_rounds() {
        let eve_ch = r.eve.as_ref().unwrap().actions[0].channel;
        let wrong = Some(eve_ch) != r.master_channel;
        match (r.bob_basis, wrong) {
            (Basis::X, _) | (Basis::Z, false) => assert_eq!(r.alice_bit, r.bob_final_bit),
            (Basis::Z, true) => {
                z_wrong += 1;
                z_agree += usize::from(r.alice_bit == r.bob_final_bit);
            }
        }
    }
    let agree = z_agree as f64 / z_wrong as f64;
    let want = common::MKS_WRONG_CHANNEL_Z_AGREEMENT;
    assert!((agree - want).abs() <= sigma3(want, z_wrong as f64), "{agree}");
}

#[test]
fn mks_detection_probability_matches_binomial_oracle() {
    // Short runs so that detection is far from certain.
    let rounds = 8;
    let trials = 20_000u64;
    let expected = common::detection_probability(rounds, common::MKS_MISMATCH_UNIFORM);
    let eve = EveStrategy::XMeasureGuessedMaster(GuessPolicy::UniformRandom);
    let detected = (0..trials)
        .filter(|&trial| {
            let setup = ProtocolSetup::ideal(ProtocolKind::MksQkd, rounds, 31)
                .with_eve(eve.clone())
                .with_trial(trial);
            run_protocol(&setup).unwrap().detection.verdict == Verdict::EveSuspected
        })
        .count();
    let rate = detected as f64 / trials as f64;
    assert!((rate - expected).abs() <= 0.01, "{rate} vs {expected}");
}

#[test]
fn mkc_master_key_is_necessary() {
    let mut setup = ProtocolSetup::ideal(ProtocolKind::MkcQkd, 40_000, 41);
    setup.pipeline.apply_master_key = false;
    let t = run_protocol(&setup).unwrap();
    assert!(t.keys.post_xor_bob.is_none());
    let kept: Vec<_> = t.kept_rounds().collect();
    let n = kept.len() as f64;
    let f_z = kept.iter().filter(|r| r.bob_basis == Basis::Z).count() as f64 / n;
    let agree = kept.iter().filter(|r| r.alice_bit == r.bob_raw_bit).count() as f64 / n;
    let want = f_z * common::MKC_WITHHELD_AGREEMENT_Z + (1.0 - f_z) * common::MKC_WITHHELD_AGREEMENT_X;
    assert!((want - (1.0 + f_z) / 2.0).abs() < 1e-12);
    // Z rounds agree deterministically; only the X half is random.
    let se = ((1.0 - f_z) * 0.25 / n).sqrt();
    assert!((agree - want).abs() <= 3.0 * se, "{agree} vs {want}");
    assert!(agree < 1.0);

    setup.pipeline.apply_master_key = true;
    let t = run_protocol(&setup).unwrap();
    assert_eq!(t.keys.alice_bits, *t.keys.bob_final());
}

#[test]
fn mkc_intercept_on_either_channel_is_detected() {
    for eve in ["intercept:1", "intercept:2", "xboth"] {
        let setup = ProtocolSetup::ideal(ProtocolKind::MkcQkd, 5_000, 43).with_eve(eve.parse().unwrap());
        let t = run_protocol(&setup).unwrap();
        assert_eq!(t.detection.verdict, Verdict::EveSuspected, "{eve}");
    }
}

#[test]
fn noise_raises_qber_without_eve() {
    let mut setup = ProtocolSetup::ideal(ProtocolKind::Bb84Eckert, 40_000, 47);
    setup.channel = ChannelModel::new(0.3).unwrap();
    let t = run_protocol(&setup).unwrap();
    let rate = t.keys.alice_bits.hamming_distance(t.keys.bob_final()).unwrap() as f64 / t.keys.len() as f64;
    // Two of the three Paulis flip any given basis: error = 2p/3.
    assert!((rate - 0.2).abs() <= sigma3(0.2, t.keys.len() as f64), "{rate}");
}
