use super::{AudioClip, SignalError};
use crate::scalar::Scalar;

/// Windowed RMS amplitude at a fixed hop.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope<T> {
    pub values: Vec<T>,
    pub hop_s: T,
    /// Analysis window length; frame `t` covers `[t·hop_s, t·hop_s + window_s)`.
    pub window_s: T,
    /// 10th percentile of `values`.
    pub noise_floor: T,
}

impl<T: Scalar> Envelope<T> {
    /// Wraps precomputed envelope values, estimating the noise floor.
    pub fn from_values(values: Vec<T>, hop_s: T, window_s: T) -> Self {
        let noise_floor = percentile(&values, T::of(10.0));
        Self { values, hop_s, window_s, noise_floor }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v))
    }
}

/// Percentile with linear interpolation between order statistics. Zero for empty input.
pub fn percentile<T: Scalar>(values: &[T], p: T) -> T {
    if values.is_empty() {
        return T::zero();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite envelope"));
    let pos = p / T::of(100.0) * T::count(sorted.len() - 1);
    let lo = pos.floor();
    let i = lo.to_usize().unwrap_or(0).min(sorted.len() - 1);
    let j = (i + 1).min(sorted.len() - 1);
    let frac = pos - lo;
    sorted[i] + (sorted[j] - sorted[i]) * frac
}

pub const DEFAULT_WINDOW_S: f64 = 0.02;
pub const DEFAULT_HOP_S: f64 = 0.01;

/// RMS envelope; `values[t]` is the RMS of samples `[t·hop, t·hop + window)`.
pub fn envelope<T: Scalar>(clip: &AudioClip<T>, window_s: T, hop_s: T) -> Result<Envelope<T>, SignalError> {
    let rate = T::from_u32(clip.sample_rate()).unwrap();
    let window = (window_s * rate).round().to_usize().unwrap_or(0);
    let hop = (hop_s * rate).round().to_usize().unwrap_or(0);
    if window == 0 || hop == 0 {
        return Err(SignalError::InvalidConfig("envelope window and hop must span at least one sample".into()));
    }
    if clip.len() < window {
        return Err(SignalError::ClipTooShort { len: clip.len(), needed: window });
    }
    let frames = 1 + (clip.len() - window) / hop;
    let x = clip.samples();
    let n = T::count(window);
    let values = (0..frames)
        .map(|t| {
            let w = &x[t * hop..t * hop + window];
            (w.iter().fold(T::zero(), |a, &s| a + s * s) / n).sqrt()
        })
        .collect();
    Ok(Envelope::from_values(values, T::count(hop) / rate, T::count(window) / rate))
}
