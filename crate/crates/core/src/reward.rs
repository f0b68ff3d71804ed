//! Scalar reward head over the pooled encoder output, trained from pairwise
//! preferences with a Bradley–Terry logistic loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::model::{is_transformer, EncoderModel, Linear, ModelError, ParamSet};
use crate::scalar::{sigmoid, softplus, Scalar};
use crate::signal::AudioClip;

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("no preference pairs to train on")]
    EmptyDataset,
    #[error("pair {pair} references clip {index}, only {len} clips given")]
    ClipIndexOutOfRange { pair: usize, index: usize, len: usize },
    #[error("pair {0} prefers a clip over itself")]
    SelfPair(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `chosen` and `rejected` index into the clip list handed to [`train_reward`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferencePair {
    pub chosen: usize,
    pub rejected: usize,
    pub annotator_id: String,
}

impl PreferencePair {
    pub fn new(chosen: usize, rejected: usize, annotator_id: impl Into<String>) -> Self {
        Self { chosen, rejected, annotator_id: annotator_id.into() }
    }
}

#[derive(Clone, Debug)]
pub struct RewardModel<T> {
    pub encoder: EncoderModel<T>,
    pub head: Linear<T>,
    /// Also update the transformer blocks during training. The conv front end
    /// stays frozen either way.
    pub train_encoder: bool,
}

impl<T: Scalar> RewardModel<T> {
    /// Zero-initialized head: every clip scores 0 before training.
    pub fn new(encoder: EncoderModel<T>) -> Self {
        let d = encoder.config.d_model;
        Self { encoder, head: Linear::zeros(d, 1), train_encoder: false }
    }

    fn head_score(&self, pooled: &[T]) -> T {
        self.head.forward(&Matrix::from_vec(1, pooled.len(), pooled.to_vec())).get(0, 0)
    }

    pub fn score_frames(&self, frames: &Matrix<T>) -> Result<T, ModelError> {
        Ok(self.head_score(&self.encoder.pooled(frames)?))
    }
}

/// Encoder → mean pool → linear head.
pub fn reward_score<T: Scalar>(rm: &RewardModel<T>, clip: &AudioClip<T>) -> Result<T, ModelError> {
    rm.score_frames(&rm.encoder.conv_frontend(clip)?)
}

/// `−ln σ(r_chosen − r_rejected)`
pub fn preference_loss<T: Scalar>(r_chosen: T, r_rejected: T) -> T {
    softplus(r_rejected - r_chosen)
}

/// Fraction of pairs whose chosen clip scores strictly higher.
pub fn pairwise_accuracy<T: Scalar>(scores: &[T], pairs: &[PreferencePair]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let hits = pairs.iter().filter(|p| scores[p.chosen] > scores[p.rejected]).count();
    hits as f64 / pairs.len() as f64
}

/// Mean preference loss of `scores` over `pairs`.
pub fn mean_preference_loss<T: Scalar>(scores: &[T], pairs: &[PreferencePair]) -> T {
    let total = pairs.iter().fold(T::zero(), |a, p| a + preference_loss(scores[p.chosen], scores[p.rejected]));
    total / T::count(pairs.len().max(1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardTrainOptions {
    pub epochs: usize,
    pub step_size: f64,
    pub seed: u64,
    /// Pairs per update; `None` means one full-batch step per epoch.
    pub batch_size: Option<usize>,
}

impl Default for RewardTrainOptions {
    fn default() -> Self {
        Self { epochs: 200, step_size: 0.5, seed: 0, batch_size: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardReport<T> {
    pub initial_loss: T,
    pub final_loss: T,
    pub accuracy: f64,
    /// Mean loss over all pairs at the start of every epoch, then once after training.
    pub loss_trace: Vec<T>,
}

fn check_pairs(pairs: &[PreferencePair], n_clips: usize) -> Result<(), RewardError> {
    if pairs.is_empty() {
        return Err(RewardError::EmptyDataset);
    }
    for (i, p) in pairs.iter().enumerate() {
        for index in [p.chosen, p.rejected] {
            if index >= n_clips {
                return Err(RewardError::ClipIndexOutOfRange { pair: i, index, len: n_clips });
            }
        }
        if p.chosen == p.rejected {
            return Err(RewardError::SelfPair(i));
        }
    }
    Ok(())
}

/// Gradient descent on the mean preference loss.
pub fn train_reward<T: Scalar>(
    rm: &mut RewardModel<T>,
    clips: &[AudioClip<T>],
    pairs: &[PreferencePair],
    opts: &RewardTrainOptions,
) -> Result<RewardReport<T>, RewardError> {
    check_pairs(pairs, clips.len())?;
    let frames = clips.iter().map(|c| rm.encoder.conv_frontend(c)).collect::<Result<Vec<_>, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let step = T::of(opts.step_size);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let batch = opts.batch_size.unwrap_or(pairs.len()).clamp(1, pairs.len());

    let mut pooled = pool_all(rm, &frames)?;
    let mut loss_trace = Vec::with_capacity(opts.epochs + 1);
    for _ in 0..opts.epochs {
        let scores: Vec<T> = pooled.iter().map(|p| rm.head_score(p)).collect();
        loss_trace.push(mean_preference_loss(&scores, pairs));
        if batch < pairs.len() {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            let scores: Vec<T> = pooled.iter().map(|p| rm.head_score(p)).collect();
            // d loss / d score per clip
            let mut d_score = vec![T::zero(); clips.len()];
            let n = T::count(chunk.len());
            for &i in chunk {
                let p = &pairs[i];
                let g = -sigmoid(scores[p.rejected] - scores[p.chosen]) / n;
                d_score[p.chosen] = d_score[p.chosen] + g;
                d_score[p.rejected] = d_score[p.rejected] - g;
            }
            let mut head_grad = rm.head.zeros_like();
            let mut enc_grad = rm.train_encoder.then(|| rm.encoder.params.zeros_like());
            for (c, &g) in d_score.iter().enumerate() {
                if g == T::zero() {
                    continue;
                }
                let x = Matrix::from_vec(1, pooled[c].len(), pooled[c].clone());
                let d_pooled = rm.head.backward(&x, &Matrix::from_vec(1, 1, vec![g]), &mut head_grad);
                if let Some(grads) = enc_grad.as_mut() {
                    let fwd = rm.encoder.pooled_forward(&frames[c])?;
                    rm.encoder.pooled_backward(&fwd, d_pooled.as_slice(), grads);
                }
            }
            rm.head.axpy_where(-step, &head_grad, |_| true);
            if let Some(grads) = enc_grad {
                rm.encoder.params.axpy_where(-step, &grads, is_transformer);
                pooled = pool_all(rm, &frames)?;
            }
        }
    }
    let scores: Vec<T> = pooled.iter().map(|p| rm.head_score(p)).collect();
    let final_loss = mean_preference_loss(&scores, pairs);
    if !final_loss.is_finite() {
        return Err(ModelError::NonFiniteLoss.into());
    }
    loss_trace.push(final_loss);
    Ok(RewardReport {
        initial_loss: loss_trace[0],
        final_loss,
        accuracy: pairwise_accuracy(&scores, pairs),
        loss_trace,
    })
}

fn pool_all<T: Scalar>(rm: &RewardModel<T>, frames: &[Matrix<T>]) -> Result<Vec<Vec<T>>, ModelError> {
    frames.iter().map(|f| rm.encoder.pooled(f)).collect()
}
