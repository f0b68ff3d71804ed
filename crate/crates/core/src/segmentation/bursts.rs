use crate::scalar::Scalar;
use crate::signal::Envelope;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BurstParams<T> {
    /// Threshold position between noise floor (0) and envelope max (1).
    pub alpha: T,
    /// Runs separated by a shorter gap are merged.
    pub merge_gap_s: T,
    /// Shorter runs are dropped.
    pub min_dur_s: T,
    /// The envelope max must reach `min_contrast · noise_floor` for any burst to exist.
    pub min_contrast: T,
}

impl<T: Scalar> Default for BurstParams<T> {
    fn default() -> Self {
        Self { alpha: T::of(0.25), merge_gap_s: T::of(0.03), min_dur_s: T::of(0.05), min_contrast: T::of(2.0) }
    }
}

/// A contiguous above-threshold region of the envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct Burst<T> {
    pub onset_s: T,
    pub offset_s: T,
    /// Maximum envelope value over the burst (its height).
    pub peak: T,
    /// Mean envelope over the burst divided by `peak`.
    pub density: T,
    /// Envelope frame range `[first_frame, end_frame)`.
    pub first_frame: usize,
    pub end_frame: usize,
}

impl<T: Scalar> Burst<T> {
    pub fn duration_s(&self) -> T {
        self.offset_s - self.onset_s
    }

    fn from_run(env: &Envelope<T>, first: usize, end: usize) -> Self {
        let frames = &env.values[first..end];
        let peak = frames.iter().fold(T::zero(), |m, &v| m.max(v));
        let mean = frames.iter().fold(T::zero(), |a, &v| a + v) / T::count(frames.len());
        // each frame stands for one hop-wide cell centred on its window
        let lead = env.window_s / T::of(2.0) - env.hop_s / T::of(2.0);
        let onset_s = (T::count(first) * env.hop_s + lead).max(T::zero());
        let offset_s = T::count(end) * env.hop_s + lead;
        Self { onset_s, offset_s, peak, density: mean / peak, first_frame: first, end_frame: end }
    }
}

/// Thresholded run detection on an envelope; returns onset-sorted,
/// non-overlapping bursts.
pub fn detect_bursts<T: Scalar>(env: &Envelope<T>, params: &BurstParams<T>) -> Vec<Burst<T>> {
    let max = env.max();
    let floor = env.noise_floor;
    if env.is_empty() || max <= T::zero() || max < params.min_contrast * floor {
        return Vec::new();
    }
    let threshold = floor + params.alpha * (max - floor);

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (t, &v) in env.values.iter().enumerate() {
        match (v > threshold, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                runs.push((s, t));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, env.len()));
    }

    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for run in runs {
        match merged.last_mut() {
            Some(prev) if T::count(run.0 - prev.1) * env.hop_s < params.merge_gap_s => prev.1 = run.1,
            _ => merged.push(run),
        }
    }

    let min_frames = (params.min_dur_s / env.hop_s - T::of(1e-9)).ceil().max(T::zero()).to_usize().unwrap_or(0);
    merged
        .into_iter()
        .filter(|&(s, e)| e - s >= min_frames.max(1))
        .map(|(s, e)| Burst::from_run(env, s, e))
        .collect()
}
