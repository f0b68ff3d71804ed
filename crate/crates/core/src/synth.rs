//! Synthetic corpora with known ground truth, used for tests, benchmarks and
//! the `synth-corpus` command.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::linalg::Matrix;
use crate::reward::PreferencePair;
use crate::scalar::Scalar;
use crate::signal::AudioClip;

fn to_clip<T: Scalar>(samples: Vec<f64>, rate: u32, id: String) -> AudioClip<T> {
    let samples = samples.into_iter().map(|x| T::of(x.clamp(-1.0, 1.0))).collect();
    AudioClip::new(samples, rate, id).expect("generator output is in range")
}

fn add_noise<R: Rng>(samples: &mut [f64], std: f64, rng: &mut R) {
    if std > 0.0 {
        let normal = Normal::new(0.0, std).expect("finite std");
        for s in samples.iter_mut() {
            *s += normal.sample(rng);
        }
    }
}

/// Adds `amp·sin(2πft + φ)` over `[start_s, end_s)`.
pub fn add_tone(samples: &mut [f64], rate: u32, freq: f64, amp: f64, phase: f64, start_s: f64, end_s: f64) {
    let sr = rate as f64;
    let a = ((start_s * sr).round().max(0.0) as usize).min(samples.len());
    let b = ((end_s * sr).round().max(0.0) as usize).min(samples.len());
    for (i, s) in samples[a..b].iter_mut().enumerate() {
        *s += amp * (TAU * freq * i as f64 / sr + phase).sin();
    }
}

/// One rectangular tone burst.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BurstSpec {
    pub start_s: f64,
    pub end_s: f64,
    pub amp: f64,
    pub freq: f64,
}

/// Sum of tone bursts over Gaussian noise.
pub fn burst_clip<T: Scalar>(bursts: &[BurstSpec], rate: u32, dur_s: f64, noise_std: f64, seed: u64) -> AudioClip<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![0.0; (dur_s * rate as f64).round() as usize];
    for b in bursts {
        add_tone(&mut samples, rate, b.freq, b.amp, 0.0, b.start_s, b.end_s);
    }
    add_noise(&mut samples, noise_std, &mut rng);
    to_clip(samples, rate, format!("bursts-{seed}"))
}

/// Bursts at [0.2, 0.4] s (amplitude 0.8) and [0.7, 0.8] s (amplitude 0.4) in a
/// one-second clip: the gap is 0.3 s and the height ratio 0.5.
pub fn two_burst_clip<T: Scalar>(rate: u32, seed: u64) -> AudioClip<T> {
    let bursts = [
        BurstSpec { start_s: 0.2, end_s: 0.4, amp: 0.8, freq: 440.0 },
        BurstSpec { start_s: 0.7, end_s: 0.8, amp: 0.4, freq: 440.0 },
    ];
    burst_clip(&bursts, rate, 1.0, 0.002, seed)
}

/// Gaussian noise only.
pub fn noise_clip<T: Scalar>(rate: u32, dur_s: f64, std: f64, seed: u64) -> AudioClip<T> {
    burst_clip(&[], rate, dur_s, std, seed).with_source_id(format!("noise-{seed}"))
}

/// Clips whose 20 ms frames each carry one of `n_units` tones, with the unit
/// sequence drawn from a sticky Markov chain.
#[derive(Clone, Debug)]
pub struct MarkovCorpus<T> {
    pub clips: Vec<AudioClip<T>>,
    /// True unit per 20 ms frame of each clip.
    pub units: Vec<Vec<usize>>,
    pub unit_freqs: Vec<f64>,
}

/// Tone frequencies spread over the lower half of the band.
pub fn unit_frequencies(n_units: usize, rate: u32) -> Vec<f64> {
    let top = rate as f64 * 0.35;
    let bottom = 250.0;
    (0..n_units)
        .map(|u| bottom * (top / bottom).powf(u as f64 / (n_units.max(2) - 1) as f64))
        .collect()
}

pub fn markov_unit_corpus<T: Scalar>(
    n_clips: usize,
    n_units: usize,
    rate: u32,
    dur_s: f64,
    stay_prob: f64,
    seed: u64,
) -> MarkovCorpus<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs = unit_frequencies(n_units, rate);
    let frame = rate as usize / 50;
    let n_frames = ((dur_s * rate as f64).round() as usize) / frame;
    let mut clips = Vec::with_capacity(n_clips);
    let mut units = Vec::with_capacity(n_clips);
    for c in 0..n_clips {
        let mut seq = Vec::with_capacity(n_frames);
        let mut u = rng.random_range(0..n_units);
        for _ in 0..n_frames {
            if !rng.random_bool(stay_prob) {
                u = (u + rng.random_range(1..n_units.max(2))) % n_units;
            }
            seq.push(u);
        }
        let mut samples = vec![0.0; n_frames * frame];
        let mut phase = 0.0f64;
        for (i, s) in samples.iter_mut().enumerate() {
            phase = (phase + TAU * freqs[seq[i / frame]] / rate as f64) % TAU;
            *s = 0.5 * phase.sin();
        }
        add_noise(&mut samples, 0.01, &mut rng);
        clips.push(to_clip(samples, rate, format!("markov-{c}")));
        units.push(seq);
    }
    MarkovCorpus { clips, units, unit_freqs: freqs }
}

/// `n_per_class` clips per frequency, each a steady tone with random
/// amplitude and phase. Labels are class indices.
pub fn tone_class_corpus<T: Scalar>(
    n_per_class: usize,
    freqs: &[f64],
    rate: u32,
    dur_s: f64,
    seed: u64,
) -> (Vec<AudioClip<T>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (dur_s * rate as f64).round() as usize;
    let mut clips = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n_per_class {
        for (class, &f) in freqs.iter().enumerate() {
            let mut samples = vec![0.0; n];
            let amp = rng.random_range(0.3..0.8);
            let phase = rng.random_range(0.0..TAU);
            add_tone(&mut samples, rate, f, amp, phase, 0.0, dur_s);
            add_noise(&mut samples, 0.01, &mut rng);
            clips.push(to_clip(samples, rate, format!("tone-{class}-{i}")));
            labels.push(class);
        }
    }
    (clips, labels)
}

/// Multi-label corpus: event type `j` is a tone at its own frequency inside
/// its own time slot, present independently with probability one half.
pub fn detection_corpus<T: Scalar>(
    n_clips: usize,
    n_labels: usize,
    rate: u32,
    dur_s: f64,
    seed: u64,
) -> (Vec<AudioClip<T>>, Vec<Vec<T>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs = unit_frequencies(n_labels, rate);
    let n = (dur_s * rate as f64).round() as usize;
    let slot = dur_s / n_labels as f64;
    let mut clips = Vec::with_capacity(n_clips);
    let mut targets = Vec::with_capacity(n_clips);
    for c in 0..n_clips {
        let mut samples = vec![0.0; n];
        let mut present = Vec::with_capacity(n_labels);
        for (j, &f) in freqs.iter().enumerate() {
            let on = rng.random_bool(0.5);
            if on {
                let amp = rng.random_range(0.4..0.8);
                add_tone(&mut samples, rate, f, amp, 0.0, j as f64 * slot + 0.1 * slot, (j + 1) as f64 * slot - 0.1 * slot);
            }
            present.push(if on { T::one() } else { T::zero() });
        }
        add_noise(&mut samples, 0.01, &mut rng);
        clips.push(to_clip(samples, rate, format!("events-{c}")));
        targets.push(present);
    }
    (clips, targets)
}

/// Preference data where the louder of two otherwise similar clips is always
/// chosen. Each pair gets two fresh clips.
pub fn preference_corpus<T: Scalar>(
    n_pairs: usize,
    rate: u32,
    dur_s: f64,
    seed: u64,
) -> (Vec<AudioClip<T>>, Vec<PreferencePair>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (dur_s * rate as f64).round() as usize;
    let mut clips = Vec::with_capacity(2 * n_pairs);
    let mut pairs = Vec::with_capacity(n_pairs);
    for p in 0..n_pairs {
        let freq = rng.random_range(300.0..1200.0);
        let lo: f64 = rng.random_range(0.05..0.45);
        let hi = (lo + rng.random_range(0.1..0.45)).min(0.95);
        let mut idx = [0usize; 2];
        for (slot, amp) in [hi, lo].into_iter().enumerate() {
            let mut samples = vec![0.0; n];
            add_tone(&mut samples, rate, freq, amp, rng.random_range(0.0..TAU), 0.0, dur_s);
            add_noise(&mut samples, 0.005, &mut rng);
            idx[slot] = clips.len();
            clips.push(to_clip(samples, rate, format!("pref-{p}-{slot}")));
        }
        pairs.push(PreferencePair::new(idx[0], idx[1], format!("synthetic-{}", p % 3)));
    }
    (clips, pairs)
}

/// `per_blob` Gaussian points around each centre. Returns the points and the
/// generating blob index of each.
pub fn gaussian_blobs<T: Scalar>(centres: &Matrix<T>, per_blob: usize, sigma: f64, seed: u64) -> (Matrix<T>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let d = centres.cols();
    let mut data = Vec::with_capacity(centres.rows() * per_blob * d);
    let mut labels = Vec::with_capacity(centres.rows() * per_blob);
    for (b, c) in centres.iter_rows().enumerate() {
        for _ in 0..per_blob {
            data.extend(c.iter().map(|&x| x + T::of(normal.sample(&mut rng))));
            labels.push(b);
        }
    }
    (Matrix::from_vec(labels.len(), d, data), labels)
}
