//! Toy self-supervised encoder: strided conv front end at 50 frames per second,
//! pre-norm transformer with sinusoidal positions, masked unit prediction with
//! cosine-similarity logits, and mean-pooled fine-tuning heads.
//!
//! Gradients are computed by hand; [`grad_check`] verifies them against central
//! differences.

mod attention;
mod config;
mod encoder;
mod finetune;
mod gradcheck;
mod params;
mod pretrain;

pub use attention::{attention_weights, component_attention, positional_encoding, scaled_dot_attention, softmax_rows};
pub use config::{ConvLayerSpec, EncoderConfig, FRAME_RATE};
pub use encoder::{export_embeddings, mask_spans, EmbeddingRow, EncoderModel};
pub use finetune::{
    bce_with_logits, finetune_classify_step, finetune_classify_step_frames, finetune_detect_step,
    finetune_detect_step_frames, head_loss_and_grad, head_loss_value, mean_pool, predict_logits,
    softmax_cross_entropy, FineTuneHead, HeadKind, HeadTarget,
};
pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport};
pub use params::{
    is_frontend, is_transformer, BlockParams, ConvParams, EncoderParams, LayerNorm, Linear, ParamSet,
};
pub use pretrain::{pretrain_step, pretrain_step_with_stats, MaskedOutcome};


use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("positional encoding needs an even width, got {0}")]
    OddDim(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("clip sample rate {got} Hz does not match model rate {expected} Hz")]
    RateMismatch { expected: u32, got: u32 },
    #[error("clip has {len} samples, the front end needs at least {needed}")]
    ClipTooShort { len: usize, needed: usize },
    #[error("{frames} frames exceed max_pos {max_pos}")]
    SequenceTooLong { frames: usize, max_pos: usize },
    #[error("no positions were masked")]
    EmptyMask,
    #[error("label {label} outside [0, {classes})")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("cannot pool an empty sequence")]
    EmptySequence,
    #[error("expected {expected} targets, got {got}")]
    TargetLengthMismatch { expected: usize, got: usize },
    #[error("layer {layer} out of range for depth {depth}")]
    LayerOutOfRange { layer: usize, depth: usize },
    #[error("head kind does not match the training objective")]
    HeadKindMismatch,
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("invalid encoder configuration: {0}")]
    InvalidConfig(String),
}
