//! Audio ingestion and frame-level features.

mod envelope;
mod features;
mod wav;

pub use envelope::{envelope, percentile, Envelope, DEFAULT_HOP_S, DEFAULT_WINDOW_S};
pub use features::{
    hz_to_mel, mel_filterbank, mel_to_hz, mfcc39, power_spectrogram, FeatureConfig, FeatureMatrix,
    Window, MFCC_COLUMNS, N_CEPS,
};
pub use wav::{encode_wav_pcm16, load_wav, parse_wav, write_wav_pcm16};

use thiserror::Error;

use crate::scalar::Scalar;

pub const MIN_SAMPLE_RATE: u32 = 8_000;
pub const MAX_SAMPLE_RATE: u32 = 48_000;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("sample {index} = {value} outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f64 },
    #[error("sample rate {0} Hz outside [8000, 48000]")]
    UnsupportedRate(u32),
    #[error("clip has {len} samples, need at least {needed}")]
    ClipTooShort { len: usize, needed: usize },
    #[error("invalid feature configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mono waveform with amplitudes in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip<T> {
    samples: Vec<T>,
    sample_rate: u32,
    source_id: String,
}

impl<T: Scalar> AudioClip<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32, source_id: impl Into<String>) -> Result<Self, SignalError> {
        if !(MIN_SAMPLE_RATE..=MAX_SAMPLE_RATE).contains(&sample_rate) {
            return Err(SignalError::UnsupportedRate(sample_rate));
        }
        if let Some((index, &v)) =
            samples.iter().enumerate().find(|(_, v)| !(v.abs() <= T::one()))
        {
            return Err(SignalError::SampleOutOfRange { index, value: v.as_f64() });
        }
        Ok(Self { samples, sample_rate, source_id: source_id.into() })
    }

    #[inline]
    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    #[inline]
    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    #[inline]
    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> T {
        T::count(self.samples.len()) / T::from_u32(self.sample_rate).unwrap()
    }

    pub fn peak(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, s| m.max(s.abs()))
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    /// Multiplies every sample by `gain`, saturating at ±1.
    pub fn scaled(&self, gain: T) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|&s| (s * gain).max(-T::one()).min(T::one()))
            .collect();
        Self { samples, sample_rate: self.sample_rate, source_id: self.source_id.clone() }
    }
}

/// Rescales the clip so its peak magnitude equals `target_peak`.
/// An all-zero clip is returned unchanged.
pub fn normalize_clip<T: Scalar>(clip: &AudioClip<T>, target_peak: T) -> AudioClip<T> {
    let peak = clip.peak();
    if peak == T::zero() {
        return clip.clone();
    }
    let gain = target_peak / peak;
    let samples = clip.samples.iter().map(|&s| s * gain).collect();
    AudioClip { samples, sample_rate: clip.sample_rate, source_id: clip.source_id.clone() }
}

pub const DEFAULT_TARGET_PEAK: f64 = 0.9;
