use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ulma_core::segmentation::{
    auc, classify_reaction, comparator, correlate_height_reactions, decompose, detect_bursts, ulm_score,
    BurstParams, ComparatorConfig, Polarity, Reaction, ReactionThresholds, SegmentationError, Squash, UlmConfig,
    VocalPattern,
};
use ulma_core::signal::Envelope;
use ulma_core::synth::{burst_clip, noise_clip, two_burst_clip, BurstSpec};

const HOP: f64 = 0.01;

/// Piecewise reading of the comparator, independent of the sign-based formula.
fn comparator_oracle(x: f64, cfg: &ComparatorConfig<f64>) -> f64 {
    if x > cfg.v_th {
        cfg.v_max
    } else if x < cfg.v_th {
        cfg.v_min
    } else {
        (cfg.v_max + cfg.v_min) / 2.0
    }
}

#[test]
fn comparator_sine_period() {
    let n = 64;
    let mut x: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin()).collect();
    x[n / 2] = 0.0;
    let cfg = ComparatorConfig { v_th: 0.0, v_max: 1.0, v_min: 0.0 };
    let out = comparator(&x, 8000, &cfg).unwrap();
    for (i, (&v, &s)) in out.values.iter().zip(&x).enumerate() {
        assert_eq!(v.to_bits(), comparator_oracle(s, &cfg).to_bits());
        let expected = if i == 0 || i == n / 2 { 0.5 } else if i < n / 2 { 1.0 } else { 0.0 };
        assert_eq!(v, expected);
    }
}

#[test]
fn comparator_constant_inputs() {
    let cfg = ComparatorConfig { v_th: 0.2, v_max: 1.0, v_min: -1.0 };
    assert!(comparator(&[1.2; 5], 8000, &cfg).unwrap().values.iter().all(|&v| v == 1.0));
    assert!(comparator(&[0.2; 5], 8000, &cfg).unwrap().values.iter().all(|&v| v == 0.0));
    let bad = ComparatorConfig { v_th: 0.0, v_max: -1.0, v_min: -1.0 };
    assert!(matches!(comparator(&[0.0], 8000, &bad), Err(SegmentationError::InvalidLevels)));
}

#[test]
fn comparator_alphabet_over_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10_000 {
        let v_min = rng.random_range(-2.0..1.0);
        let cfg = ComparatorConfig { v_th: rng.random_range(-1.0..1.0), v_max: v_min + rng.random_range(0.01..2.0), v_min };
        let x: Vec<f64> = (0..8).map(|_| if rng.random_bool(0.1) { cfg.v_th } else { rng.random_range(-1.0..1.0) }).collect();
        let out = comparator(&x, 8000, &cfg).unwrap();
        for (&v, &s) in out.values.iter().zip(&x) {
            assert!(v == cfg.v_min || v == cfg.v_max || v == cfg.mid());
            assert_eq!(v.to_bits(), comparator_oracle(s, &cfg).to_bits());
        }
    }
}

fn plateau_env(segments: &[(f64, f64, f64)], floor: f64, dur: f64) -> Envelope<f64> {
    let n = (dur / HOP).round() as usize;
    let values = (0..n)
        .map(|t| {
            let time = t as f64 * HOP + 0.01;
            segments.iter().find(|(a, b, _)| time >= *a && time < *b).map_or(floor, |s| s.2)
        })
        .collect();
    Envelope::from_values(values, HOP, 0.02)
}

#[test]
fn single_plateau_burst() {
    let env = plateau_env(&[(0.2, 0.4, 1.0)], 0.05, 1.0);
    let bursts = detect_bursts(&env, &BurstParams::default());
    assert_eq!(bursts.len(), 1);
    assert!((bursts[0].onset_s - 0.2).abs() <= HOP + 1e-12);
    assert!((bursts[0].offset_s - 0.4).abs() <= HOP + 1e-12);
    assert_eq!(bursts[0].peak, 1.0);
    assert!(bursts[0].density > 0.0 && bursts[0].density <= 1.0);
}

#[test]
fn flat_envelope_has_no_bursts() {
    let env = plateau_env(&[], 0.05, 1.0);
    assert!(detect_bursts(&env, &BurstParams::default()).is_empty());
}

#[test]
fn close_plateaus_merge() {
    let env = plateau_env(&[(0.2, 0.4, 1.0), (0.41, 0.6, 0.9)], 0.05, 1.0);
    let bursts = detect_bursts(&env, &BurstParams::default());
    assert_eq!(bursts.len(), 1);
    assert!((bursts[0].offset_s - 0.6).abs() <= HOP + 1e-12);
}

#[test]
fn two_burst_clip_decomposition() {
    for seed in 0..5 {
        let p = decompose(&two_burst_clip::<f64>(16_000, seed)).unwrap();
        let fil = p.fil.as_ref().unwrap();
        for (got, want) in [(p.ism.onset_s, 0.2), (p.ism.offset_s, 0.4), (fil.onset_s, 0.7), (fil.offset_s, 0.8)] {
            assert!((got - want).abs() <= HOP + 1e-9, "seed {seed}: {got} vs {want}");
        }
        assert!((p.chirps_s.unwrap() - 0.3).abs() <= HOP + 1e-9);
        assert!((p.height_ratio.unwrap() - 0.5).abs() <= 0.02);
        assert!(p.harf_level >= 0.0);
    }
}

#[test]
fn single_burst_has_no_fil() {
    let clip = burst_clip::<f64>(&[BurstSpec { start_s: 0.3, end_s: 0.6, amp: 0.7, freq: 300.0 }], 8000, 1.0, 0.002, 1);
    let p = decompose(&clip).unwrap();
    assert!(p.fil.is_none() && p.chirps_s.is_none() && p.height_ratio.is_none());
}

#[test]
fn noise_has_no_ism() {
    for seed in 0..5 {
        let clip = noise_clip::<f64>(16_000, 1.0, 0.05, seed);
        assert!(matches!(decompose(&clip), Err(SegmentationError::NoIsmFound)));
    }
}

/// Pairwise-count definition of AUC.
fn brute_auc(pairs: &[(f64, Polarity)]) -> f64 {
    let mut score = 0.0;
    let mut count = 0.0;
    for &(p, lp) in pairs {
        for &(n, ln) in pairs {
            if lp == Polarity::Positive && ln == Polarity::Negative {
                count += 1.0;
                score += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
            }
        }
    }
    score / count
}

fn random_labelled(n: usize, seed: u64, discrete: bool) -> Vec<(f64, Polarity)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r: f64 = rng.random_range(0.0..1.0);
            let r = if discrete { (r * 5.0).floor() / 5.0 } else { r };
            (r, if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative })
        })
        .collect()
}

#[test]
fn auc_matches_brute_force() {
    for seed in 0..20 {
        let pairs = random_labelled(60, seed, seed % 2 == 0);
        assert!((auc(&pairs).unwrap() - brute_auc(&pairs)).abs() < 1e-12);
    }
}

#[test]
fn random_labels_give_chance_auc() {
    let pairs = random_labelled(1000, 99, false);
    let a = auc(&pairs).unwrap();
    assert!((a - 0.5).abs() <= 0.06, "{a}");
}

#[test]
fn correlation_report_on_separated_classes() {
    let mut pairs = vec![(0.9, Polarity::Positive); 4];
    pairs.extend([(0.1, Polarity::Negative); 4]);
    let r = correlate_height_reactions(&pairs).unwrap();
    assert_eq!(r.auc, 1.0);
    assert!(r.threshold > 0.1 && r.threshold <= 0.9);
    assert!(matches!(
        correlate_height_reactions(&[(0.3, Polarity::Positive)]),
        Err(SegmentationError::MissingClass(Polarity::Negative))
    ));
}

#[test]
fn ulm_reference_value() {
    let p = two_burst_clip::<f64>(16_000, 0);
    let mut pattern = decompose(&p).unwrap();
    pattern.harf_level = 0.1;
    pattern.ism.peak = 1.0;
    pattern.fil.as_mut().unwrap().peak = 0.5;
    pattern.chirps_s = Some(0.3);
    let cfg = UlmConfig { squash: Squash::Logistic, chirps_norm: false };
    let expected = 0.1 / (1.0 + f64::exp(-1.8));
    assert!((ulm_score(&pattern, &cfg, 1.0).unwrap() - expected).abs() < 1e-15);
}

fn pattern_with(h: f64, i: f64, f: Option<f64>) -> VocalPattern<f64> {
    let mut p = decompose(&two_burst_clip::<f64>(8000, 0)).unwrap();
    p.harf_level = h;
    p.ism.peak = i;
    match f {
        Some(f) => p.fil.as_mut().unwrap().peak = f,
        None => {
            p.fil = None;
            p.chirps_s = None;
        }
    }
    p
}

proptest! {
    #[test]
    fn comparator_threshold_monotone(x in proptest::collection::vec(-1.0f64..1.0, 1..50), t1 in -1.0f64..1.0, dt in 0.0f64..1.0) {
        let count = |th: f64| {
            let cfg = ComparatorConfig { v_th: th, v_max: 1.0, v_min: -1.0 };
            comparator(&x, 8000, &cfg).unwrap().values.iter().filter(|&&v| v == 1.0).count()
        };
        prop_assert!(count(t1 + dt) <= count(t1));
    }

    #[test]
    fn comparator_commutes_with_reversal(x in proptest::collection::vec(-1.0f64..1.0, 1..50), th in -1.0f64..1.0) {
        let cfg = ComparatorConfig { v_th: th, v_max: 0.7, v_min: -0.3 };
        let mut rev = x.clone();
        rev.reverse();
        let mut a = comparator(&x, 8000, &cfg).unwrap().values;
        a.reverse();
        prop_assert_eq!(a, comparator(&rev, 8000, &cfg).unwrap().values);
    }

    #[test]
    fn auc_antisymmetry(seed in any::<u64>(), n in 2usize..80) {
        let mut pairs = random_labelled(n, seed, seed % 3 == 0);
        pairs[0].1 = Polarity::Positive;
        pairs[1].1 = Polarity::Negative;
        let flipped: Vec<_> = pairs.iter().map(|&(r, p)| (r, p.flipped())).collect();
        let a = auc(&pairs).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert_eq!(a + auc(&flipped).unwrap(), 1.0);
    }

    #[test]
    fn bursts_are_sorted_and_long_enough(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..200).map(|_| if rng.random_bool(0.3) { rng.random_range(0.3..1.0) } else { 0.05 }).collect();
        let params = BurstParams::default();
        let bursts = detect_bursts(&Envelope::from_values(values, HOP, 0.02), &params);
        for b in &bursts {
            prop_assert!(b.onset_s < b.offset_s && b.peak > 0.0 && b.density > 0.0 && b.density <= 1.0);
            prop_assert!(b.duration_s() >= params.min_dur_s - 1e-9);
        }
        for w in bursts.windows(2) {
            prop_assert!(w[0].offset_s <= w[1].onset_s);
        }
    }

    #[test]
    fn decompose_ratio_in_unit_interval(a1 in 0.2f64..0.9, a2 in 0.2f64..0.9, seed in 0u64..100) {
        let bursts = [
            BurstSpec { start_s: 0.1, end_s: 0.3, amp: a1, freq: 500.0 },
            BurstSpec { start_s: 0.5, end_s: 0.7, amp: a2, freq: 500.0 },
        ];
        let p = decompose(&burst_clip::<f64>(&bursts, 8000, 1.0, 0.002, seed)).unwrap();
        if let Some(r) = p.height_ratio {
            prop_assert!(r > 0.0 && r <= 1.0);
            prop_assert!(p.chirps_s.unwrap() >= 0.0);
        }
    }

    #[test]
    fn ulm_monotone(h in 0.0f64..1.0, i in 0.0f64..1.0, f in 0.0f64..1.0, d in 0.0f64..0.5) {
        for squash in [Squash::Logistic, Squash::Identity, Squash::Tanh] {
            let cfg = UlmConfig { squash, chirps_norm: true };
            let s = |h: f64, i: f64, f: f64| ulm_score(&pattern_with(h, i, Some(f)), &cfg, 1.0).unwrap();
            let base = s(h, i, f);
            prop_assert!(s(h + d, i, f) >= base);
            prop_assert!(s(h, i + d, f) >= base);
            prop_assert!(s(h, i, f + d) >= base);
            prop_assert_eq!(s(0.0, i, f), 0.0);
        }
    }

    #[test]
    fn reaction_is_total(r in proptest::option::of(0.0f64..=1.0)) {
        let got = classify_reaction(r, &ReactionThresholds::default()).unwrap();
        let expected = match r {
            None => Reaction::NoContextualResponse,
            Some(r) if r >= 0.6 => Reaction::StrongEngagement,
            Some(r) if r >= 0.2 => Reaction::Moderate,
            Some(_) => Reaction::LowInterest,
        };
        prop_assert_eq!(got, expected);
    }
}
