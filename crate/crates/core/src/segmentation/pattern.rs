use super::bursts::{detect_bursts, Burst, BurstParams};
use super::SegmentationError;
use crate::scalar::{sigmoid, Scalar};
use crate::signal::{envelope, percentile, AudioClip, Envelope};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentConfig<T> {
    pub window_s: T,
    pub hop_s: T,
    pub bursts: BurstParams<T>,
}

impl<T: Scalar> Default for SegmentConfig<T> {
    fn default() -> Self {
        Self {
            window_s: T::of(crate::signal::DEFAULT_WINDOW_S),
            hop_s: T::of(crate::signal::DEFAULT_HOP_S),
            bursts: BurstParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VocalPattern<T> {
    pub ism: Burst<T>,
    pub fil: Option<Burst<T>>,
    /// Gap from Ism offset to Fil onset.
    pub chirps_s: Option<T>,
    /// Median envelope over frames outside every burst.
    pub harf_level: T,
    pub height_ratio: Option<T>,
}

/// Decomposes with default envelope and burst settings.
pub fn decompose<T: Scalar>(clip: &AudioClip<T>) -> Result<VocalPattern<T>, SegmentationError> {
    decompose_with(clip, &SegmentConfig::default()).map(|(p, _)| p)
}

/// Decomposes a clip, also returning the envelope it was derived from.
pub fn decompose_with<T: Scalar>(
    clip: &AudioClip<T>,
    cfg: &SegmentConfig<T>,
) -> Result<(VocalPattern<T>, Envelope<T>), SegmentationError> {
    let env = envelope(clip, cfg.window_s, cfg.hop_s)?;
    let bursts = detect_bursts(&env, &cfg.bursts);
    let pattern = pattern_from_bursts(&env, &bursts)?;
    Ok((pattern, env))
}

fn pattern_from_bursts<T: Scalar>(env: &Envelope<T>, bursts: &[Burst<T>]) -> Result<VocalPattern<T>, SegmentationError> {
    // earliest burst wins a tie on peak
    let ism_idx = bursts
        .iter()
        .enumerate()
        .fold(None::<usize>, |best, (i, b)| match best {
            Some(j) if bursts[j].peak >= b.peak => Some(j),
            _ => Some(i),
        })
        .ok_or(SegmentationError::NoIsmFound)?;
    let ism = bursts[ism_idx].clone();
    let fil = bursts[ism_idx + 1..].iter().find(|b| b.onset_s > ism.offset_s).cloned();

    let mut in_burst = vec![false; env.len()];
    for b in bursts {
        in_burst[b.first_frame..b.end_frame].iter_mut().for_each(|f| *f = true);
    }
    let residual: Vec<T> = env.values.iter().zip(&in_burst).filter(|(_, &b)| !b).map(|(&v, _)| v).collect();
    let harf_level = percentile(&residual, T::of(50.0));

    let chirps_s = fil.as_ref().map(|f| f.onset_s - ism.offset_s);
    let mut pattern = VocalPattern { ism, fil, chirps_s, harf_level, height_ratio: None };
    pattern.height_ratio = height_ratio(&pattern);
    Ok(pattern)
}

/// Fil peak relative to Ism peak, when a Fil exists.
pub fn height_ratio<T: Scalar>(pattern: &VocalPattern<T>) -> Option<T> {
    pattern.fil.as_ref().map(|f| f.peak / pattern.ism.peak)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reaction {
    StrongEngagement,
    Moderate,
    LowInterest,
    NoContextualResponse,
}

impl Reaction {
    pub fn as_str(self) -> &'static str {
        match self {
            Reaction::StrongEngagement => "StrongEngagement",
            Reaction::Moderate => "Moderate",
            Reaction::LowInterest => "LowInterest",
            Reaction::NoContextualResponse => "NoContextualResponse",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReactionThresholds<T> {
    pub hi: T,
    pub lo: T,
}

impl<T: Scalar> Default for ReactionThresholds<T> {
    fn default() -> Self {
        Self { hi: T::of(0.6), lo: T::of(0.2) }
    }
}

pub fn classify_reaction<T: Scalar>(
    ratio: Option<T>,
    thresholds: &ReactionThresholds<T>,
) -> Result<Reaction, SegmentationError> {
    let ReactionThresholds { hi, lo } = *thresholds;
    if !(T::zero() <= lo && lo < hi && hi <= T::one()) {
        return Err(SegmentationError::InvalidThresholds);
    }
    Ok(match ratio {
        None => Reaction::NoContextualResponse,
        Some(r) if r >= hi => Reaction::StrongEngagement,
        Some(r) if r >= lo => Reaction::Moderate,
        Some(_) => Reaction::LowInterest,
    })
}

/// Monotone squashing function applied to `Ism + Chirps + Fil`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Squash {
    #[default]
    Logistic,
    Identity,
    Tanh,
}

impl Squash {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Squash::Logistic => sigmoid(x),
            Squash::Identity => x,
            Squash::Tanh => x.tanh(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UlmConfig {
    pub squash: Squash,
    /// Express chirps as a fraction of clip duration instead of seconds.
    pub chirps_norm: bool,
}

impl Default for UlmConfig {
    fn default() -> Self {
        Self { squash: Squash::Logistic, chirps_norm: true }
    }
}

/// `harf · f(ism + chirps + fil)`.
pub fn ulm_score<T: Scalar>(pattern: &VocalPattern<T>, cfg: &UlmConfig, clip_dur_s: T) -> Result<T, SegmentationError> {
    if !(clip_dur_s > T::zero()) {
        return Err(SegmentationError::InvalidDuration);
    }
    let ism = pattern.ism.peak;
    let fil = pattern.fil.as_ref().map_or(T::zero(), |f| f.peak);
    let chirps = match (pattern.fil.as_ref(), pattern.chirps_s) {
        (Some(_), Some(c)) if cfg.chirps_norm => c / clip_dur_s,
        (Some(_), Some(c)) => c,
        _ => T::zero(),
    };
    Ok(pattern.harf_level * cfg.squash.apply(ism + chirps + fil))
}
