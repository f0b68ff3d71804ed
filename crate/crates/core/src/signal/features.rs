use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{AudioClip, SignalError};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Number of static cepstra per frame (c0 is replaced by log energy).
pub const N_CEPS: usize = 13;
/// Statics, deltas and delta-deltas.
pub const MFCC_COLUMNS: usize = 3 * N_CEPS;
const DELTA_WINDOW: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    Hamming,
    Rectangular,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub n_fft: usize,
    pub n_mels: usize,
    pub n_ceps: usize,
    pub pre_emphasis: f64,
    pub energy_floor: f64,
    pub window: Window,
}

impl FeatureConfig {
    /// 25 ms frames, 10 ms hop, 26 mel bands.
    pub fn for_rate(sample_rate: u32) -> Self {
        let frame_len = (sample_rate as usize * 25).div_ceil(1000);
        let hop = (sample_rate as usize * 10).div_ceil(1000);
        Self {
            frame_len,
            hop,
            n_fft: frame_len.next_power_of_two(),
            n_mels: 26,
            n_ceps: N_CEPS,
            pre_emphasis: 0.97,
            energy_floor: 1e-10,
            window: Window::Hamming,
        }
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let bad = |m: &str| Err(SignalError::InvalidConfig(m.to_string()));
        if self.hop == 0 || self.hop > self.frame_len {
            return bad("need 0 < hop <= frame_len");
        }
        if self.frame_len > self.n_fft || !self.n_fft.is_power_of_two() {
            return bad("n_fft must be a power of two >= frame_len");
        }
        if self.n_ceps != N_CEPS || self.n_ceps > self.n_mels {
            return bad("n_ceps must be 13 and <= n_mels");
        }
        if !(self.energy_floor > 0.0) {
            return bad("energy_floor must be positive");
        }
        Ok(())
    }

    pub fn frame_count(&self, n_samples: usize) -> Result<usize, SignalError> {
        if n_samples < self.frame_len {
            return Err(SignalError::ClipTooShort { len: n_samples, needed: self.frame_len });
        }
        Ok(1 + (n_samples - self.frame_len) / self.hop)
    }

    fn window_coefficients<T: Scalar>(&self) -> Vec<T> {
        let n = self.frame_len;
        match self.window {
            Window::Rectangular => vec![T::one(); n],
            Window::Hamming if n == 1 => vec![T::one()],
            Window::Hamming => (0..n)
                .map(|i| {
                    let phase = T::TAU() * T::count(i) / T::count(n - 1);
                    T::of(0.54) - T::of(0.46) * phase.cos()
                })
                .collect(),
        }
    }
}

/// Frames × 39 MFCC matrix: columns 0–12 statics (column 0 = log energy),
/// 13–25 deltas, 26–38 delta-deltas.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix<T> {
    pub values: Matrix<T>,
    pub hop_s: T,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }
}

struct FramePowers<T: Scalar> {
    fft: std::sync::Arc<dyn rustfft::Fft<T>>,
    window: Vec<T>,
    buf: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> FramePowers<T> {
    fn new(cfg: &FeatureConfig) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        let scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        Self {
            fft,
            window: cfg.window_coefficients(),
            buf: vec![Complex::new(T::zero(), T::zero()); cfg.n_fft],
            scratch,
        }
    }

    /// Squared DFT magnitudes of the windowed, zero-padded frame, bins 0..=n_fft/2.
    fn compute(&mut self, frame: &[T], out: &mut [T]) {
        for (i, b) in self.buf.iter_mut().enumerate() {
            let x = if i < frame.len() { frame[i] * self.window[i] } else { T::zero() };
            *b = Complex::new(x, T::zero());
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = b.norm_sqr();
        }
    }
}

/// Power spectrogram, frames × (n_fft/2 + 1). The final partial frame is dropped.
pub fn power_spectrogram<T: Scalar>(clip: &AudioClip<T>, cfg: &FeatureConfig) -> Result<Matrix<T>, SignalError> {
    cfg.validate()?;
    let frames = cfg.frame_count(clip.len())?;
    let bins = cfg.n_fft / 2 + 1;
    let mut out = Matrix::zeros(frames, bins);
    let mut fp = FramePowers::new(cfg);
    let x = clip.samples();
    for t in 0..frames {
        let start = t * cfg.hop;
        fp.compute(&x[start..start + cfg.frame_len], out.row_mut(t));
    }
    Ok(out)
}

pub fn hz_to_mel<T: Scalar>(hz: T) -> T {
    T::of(2595.0) * (T::one() + hz / T::of(700.0)).log10()
}

pub fn mel_to_hz<T: Scalar>(mel: T) -> T {
    T::of(700.0) * (T::of(10.0).powf(mel / T::of(2595.0)) - T::one())
}

/// Triangular filters equally spaced on the HTK mel scale between 0 Hz and Nyquist,
/// evaluated at the continuous bin frequencies. Shape n_mels × (n_fft/2 + 1).
pub fn mel_filterbank<T: Scalar>(n_mels: usize, n_fft: usize, sample_rate: u32) -> Matrix<T> {
    let bins = n_fft / 2 + 1;
    let nyquist = T::from_u32(sample_rate).unwrap() / T::of(2.0);
    let mel_max = hz_to_mel(nyquist);
    let edges: Vec<T> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * T::count(i) / T::count(n_mels + 1)))
        .collect();
    let bin_hz = T::from_u32(sample_rate).unwrap() / T::count(n_fft);
    let mut fb = Matrix::zeros(n_mels, bins);
    for m in 0..n_mels {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..bins {
            let f = T::count(k) * bin_hz;
            let w = ((f - lo) / (center - lo)).min((hi - f) / (hi - center));
            if w > T::zero() {
                fb.set(m, k, w);
            }
        }
    }
    fb
}

fn deltas<T: Scalar>(src: &Matrix<T>, src_col: usize, dst: &mut Matrix<T>, dst_col: usize, width: usize) {
    let rows = src.rows();
    let last = rows as isize - 1;
    let denom = T::of(2.0) * T::count((1..=DELTA_WINDOW).map(|n| n * n).sum());
    let at = |t: isize, c: usize| src.get(t.clamp(0, last) as usize, src_col + c);
    for t in 0..rows as isize {
        for c in 0..width {
            let mut acc = T::zero();
            for n in 1..=DELTA_WINDOW as isize {
                acc = acc + T::count(n as usize) * (at(t + n, c) - at(t - n, c));
            }
            dst.set(t as usize, dst_col + c, acc / denom);
        }
    }
}

/// 39-dimensional MFCC features: pre-emphasis, Hamming-windowed power spectrum,
/// HTK mel filterbank, floored log, orthonormal DCT-II with c0 replaced by the
/// log frame energy, then ±2-frame regression deltas and delta-deltas with
/// edge replication.
pub fn mfcc39<T: Scalar>(clip: &AudioClip<T>, cfg: &FeatureConfig) -> Result<FeatureMatrix<T>, SignalError> {
    cfg.validate()?;
    let frames = cfg.frame_count(clip.len())?;
    let x = clip.samples();
    let alpha = T::of(cfg.pre_emphasis);
    let emphasized: Vec<T> = (0..x.len())
        .map(|i| if i == 0 { x[0] } else { x[i] - alpha * x[i - 1] })
        .collect();

    let fb = mel_filterbank::<T>(cfg.n_mels, cfg.n_fft, clip.sample_rate());
    let floor = T::of(cfg.energy_floor);
    let n_mels = cfg.n_mels;
    let dct: Vec<Vec<T>> = (0..N_CEPS)
        .map(|k| {
            let norm = if k == 0 { (T::one() / T::count(n_mels)).sqrt() } else { (T::of(2.0) / T::count(n_mels)).sqrt() };
            (0..n_mels)
                .map(|n| norm * (T::PI() * T::count(k) * T::count(2 * n + 1) / T::count(2 * n_mels)).cos())
                .collect()
        })
        .collect();

    let mut out = Matrix::zeros(frames, MFCC_COLUMNS);
    let mut fp = FramePowers::new(cfg);
    let mut power = vec![T::zero(); cfg.n_fft / 2 + 1];
    let mut log_mel = vec![T::zero(); n_mels];
    for t in 0..frames {
        let frame = &emphasized[t * cfg.hop..t * cfg.hop + cfg.frame_len];
        fp.compute(frame, &mut power);
        for (m, lm) in log_mel.iter_mut().enumerate() {
            let e = crate::linalg::dot(fb.row(m), &power);
            *lm = e.max(floor).ln();
        }
        let row = out.row_mut(t);
        for k in 1..N_CEPS {
            row[k] = crate::linalg::dot(&dct[k], &log_mel);
        }
        let energy = frame.iter().fold(T::zero(), |a, &s| a + s * s);
        row[0] = energy.max(floor).ln();
    }
    let statics = out.clone();
    deltas(&statics, 0, &mut out, N_CEPS, N_CEPS);
    let with_deltas = out.clone();
    deltas(&with_deltas, N_CEPS, &mut out, 2 * N_CEPS, N_CEPS);
    let hop_s = T::count(cfg.hop) / T::from_u32(clip.sample_rate()).unwrap();
    Ok(FeatureMatrix { values: out, hop_s })
}
