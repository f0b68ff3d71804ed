//! Ism/Fil/Harf structure of a vocalization.
//!
//! The Ism is the loudest burst, the Fil the first burst following it, and the
//! Harf the residual level across the rest of the timeline.

mod bursts;
mod comparator;
mod correlation;
mod pattern;

pub use bursts::{detect_bursts, Burst, BurstParams};
pub use comparator::{comparator, BinaryWave, ComparatorConfig};
pub use correlation::{correlate_height_reactions, auc, CorrelationReport, Polarity};
pub use pattern::{
    classify_reaction, decompose, decompose_with, height_ratio, ulm_score, Reaction, ReactionThresholds,
    SegmentConfig, Squash, UlmConfig, VocalPattern,
};

use thiserror::Error;

use crate::signal::SignalError;

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("comparator levels require v_min < v_max")]
    InvalidLevels,
    #[error("input signal is empty")]
    EmptySignal,
    #[error("no Ism burst found")]
    NoIsmFound,
    #[error("reaction thresholds require 0 <= lo < hi <= 1")]
    InvalidThresholds,
    #[error("clip duration must be positive")]
    InvalidDuration,
    #[error("need at least one ratio of each label, missing {0:?}")]
    MissingClass(Polarity),
    #[error(transparent)]
    Signal(#[from] SignalError),
}
