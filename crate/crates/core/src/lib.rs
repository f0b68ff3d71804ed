//! Bioacoustic analysis toolkit.
//!
//! Vocalizations are decomposed into a dominant burst (Ism), a follow-up burst
//! (Fil) and the connecting contour (Harf). On top of that sit MFCC features,
//! k-means acoustic units, a small masked-prediction encoder with fine-tuning
//! heads, and a scalar reward model trained from pairwise preferences.
//!
//! Everything is generic over the float type (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.

pub mod harf;
pub mod linalg;
pub mod model;
pub mod reward;
pub mod scalar;
pub mod segmentation;
pub mod signal;
pub mod synth;
pub mod units;

pub use scalar::Scalar;

pub type Matrix = linalg::Matrix<f64>;
pub type AudioClip = signal::AudioClip<f64>;
pub type Envelope = signal::Envelope<f64>;
pub type FeatureMatrix = signal::FeatureMatrix<f64>;
pub type VocalPattern = segmentation::VocalPattern<f64>;
pub type Burst = segmentation::Burst<f64>;
pub type CorrelationReport = segmentation::CorrelationReport<f64>;
pub type Anchor = harf::Anchor<f64>;
pub type Parabola = harf::Parabola<f64>;
pub type Codebook = units::Codebook<f64>;
pub type EncoderModel = model::EncoderModel<f64>;
pub type EncoderParams = model::EncoderParams<f64>;
pub type FineTuneHead = model::FineTuneHead<f64>;
pub type RewardModel = reward::RewardModel<f64>;
