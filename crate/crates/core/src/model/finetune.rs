use super::encoder::{EncoderModel, StackOutput};
use super::params::{is_transformer, EncoderParams, Linear, ParamSet};
use super::ModelError;
use crate::linalg::Matrix;
use crate::scalar::{sigmoid, softplus, Scalar};
use crate::signal::AudioClip;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadKind {
    /// Softmax over mutually exclusive classes.
    Classify,
    /// Independent sigmoid per label.
    Detect,
}

/// Linear layer over the mean-pooled encoder output.
#[derive(Clone, Debug, PartialEq)]
pub struct FineTuneHead<T> {
    pub linear: Linear<T>,
    pub kind: HeadKind,
}

impl<T: Scalar> FineTuneHead<T> {
    /// Zero-initialized, so every logit starts at 0.
    pub fn new(d_model: usize, n_classes: usize, kind: HeadKind) -> Self {
        Self { linear: Linear::zeros(d_model, n_classes), kind }
    }

    pub fn n_classes(&self) -> usize {
        self.linear.weight.cols()
    }

    pub fn logits(&self, pooled: &[T]) -> Vec<T> {
        self.linear.forward(&Matrix::from_vec(1, pooled.len(), pooled.to_vec())).into_vec()
    }
}

impl<T: Scalar> ParamSet<T> for FineTuneHead<T> {
    fn tensors(&self) -> Vec<(String, &Matrix<T>)> {
        vec![("head.weight".into(), &self.linear.weight), ("head.bias".into(), &self.linear.bias)]
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<T>)> {
        vec![("head.weight".into(), &mut self.linear.weight), ("head.bias".into(), &mut self.linear.bias)]
    }
}

/// Frame average of a T × d sequence.
pub fn mean_pool<T: Scalar>(hidden: &Matrix<T>) -> Result<Vec<T>, ModelError> {
    if hidden.rows() == 0 {
        return Err(ModelError::EmptySequence);
    }
    Ok(hidden.column_means())
}

/// Softmax cross-entropy and its gradient with respect to the logits.
pub fn softmax_cross_entropy<T: Scalar>(logits: &[T], label: usize) -> (T, Vec<T>) {
    let max = logits.iter().fold(T::neg_infinity(), |a, &v| a.max(v));
    let lse = max + logits.iter().fold(T::zero(), |a, &v| a + (v - max).exp()).ln();
    let grad = logits
        .iter()
        .enumerate()
        .map(|(c, &z)| (z - lse).exp() - if c == label { T::one() } else { T::zero() })
        .collect();
    (lse - logits[label], grad)
}

/// Mean binary cross-entropy over labels and its gradient.
pub fn bce_with_logits<T: Scalar>(logits: &[T], targets: &[T]) -> (T, Vec<T>) {
    let n = T::count(logits.len());
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &y) in logits.iter().zip(targets) {
        // −y·ln σ(z) − (1−y)·ln(1−σ(z))
        loss = loss + y * softplus(-z) + (T::one() - y) * softplus(z);
        grad.push((sigmoid(z) - y) / n);
    }
    (loss / n, grad)
}

pub(crate) struct PooledForward<T> {
    stack: StackOutput<T>,
    pub pooled: Vec<T>,
}

impl<T: Scalar> EncoderModel<T> {
    pub(crate) fn pooled_forward(&self, frames: &Matrix<T>) -> Result<PooledForward<T>, ModelError> {
        let x0 = self.embed(frames, None);
        let stack = self.stack_forward(&x0, None);
        let pooled = mean_pool(stack.hidden.last().expect("at least one block"))?;
        Ok(PooledForward { stack, pooled })
    }

    /// Accumulates transformer gradients for an upstream gradient on the pooled vector.
    pub(crate) fn pooled_backward(&self, fwd: &PooledForward<T>, d_pooled: &[T], grads: &mut EncoderParams<T>) {
        let last = fwd.stack.hidden.last().expect("at least one block");
        let frames = last.rows();
        let scale = T::one() / T::count(frames);
        let row: Vec<T> = d_pooled.iter().map(|&g| g * scale).collect();
        let mut d_h = Matrix::zeros(frames, last.cols());
        for t in 0..frames {
            d_h.row_mut(t).copy_from_slice(&row);
        }
        self.stack_backward(&fwd.stack, &d_h, grads);
    }

    /// Mean-pooled final hidden representation of precomputed front-end frames.
    pub fn pooled(&self, frames: &Matrix<T>) -> Result<Vec<T>, ModelError> {
        self.pooled_forward(frames).map(|f| f.pooled)
    }
}

/// What a fine-tune head is trained against.
#[derive(Clone, Copy, Debug)]
pub enum HeadTarget<'a, T> {
    Class(usize),
    Labels(&'a [T]),
}

fn head_loss<T: Scalar>(head: &FineTuneHead<T>, logits: &[T], target: HeadTarget<'_, T>) -> Result<(T, Vec<T>), ModelError> {
    let n = head.n_classes();
    match (head.kind, target) {
        (HeadKind::Classify, HeadTarget::Class(label)) => {
            if label >= n {
                return Err(ModelError::LabelOutOfRange { label, classes: n });
            }
            Ok(softmax_cross_entropy(logits, label))
        }
        (HeadKind::Detect, HeadTarget::Labels(targets)) => {
            if targets.len() != n {
                return Err(ModelError::TargetLengthMismatch { expected: n, got: targets.len() });
            }
            Ok(bce_with_logits(logits, targets))
        }
        _ => Err(ModelError::HeadKindMismatch),
    }
}

/// Loss plus gradients for the transformer blocks and the head. The front end
/// receives no gradient.
pub fn head_loss_and_grad<T: Scalar>(
    model: &EncoderModel<T>,
    head: &FineTuneHead<T>,
    frames: &Matrix<T>,
    target: HeadTarget<'_, T>,
) -> Result<(T, EncoderParams<T>, FineTuneHead<T>), ModelError> {
    let fwd = model.pooled_forward(frames)?;
    let logits = head.logits(&fwd.pooled);
    let (loss, d_logits) = head_loss(head, &logits, target)?;
    let mut head_grad = head.zeros_like();
    let pooled = Matrix::from_vec(1, fwd.pooled.len(), fwd.pooled.clone());
    let d_pooled = head.linear.backward(&pooled, &Matrix::from_vec(1, d_logits.len(), d_logits), &mut head_grad.linear);
    let mut grads = model.params.zeros_like();
    model.pooled_backward(&fwd, d_pooled.as_slice(), &mut grads);
    Ok((loss, grads, head_grad))
}

/// Loss only; shares the forward path with [`head_loss_and_grad`].
pub fn head_loss_value<T: Scalar>(
    model: &EncoderModel<T>,
    head: &FineTuneHead<T>,
    frames: &Matrix<T>,
    target: HeadTarget<'_, T>,
) -> Result<T, ModelError> {
    let pooled = model.pooled(frames)?;
    head_loss(head, &head.logits(&pooled), target).map(|(l, _)| l)
}

/// Head logits for precomputed front-end frames.
pub fn predict_logits<T: Scalar>(model: &EncoderModel<T>, head: &FineTuneHead<T>, frames: &Matrix<T>) -> Result<Vec<T>, ModelError> {
    Ok(head.logits(&model.pooled(frames)?))
}

fn head_step<T: Scalar>(
    model: &mut EncoderModel<T>,
    head: &mut FineTuneHead<T>,
    frames: &Matrix<T>,
    target: HeadTarget<'_, T>,
    step_size: T,
) -> Result<T, ModelError> {
    let (loss, grads, head_grad) = head_loss_and_grad(model, head, frames, target)?;
    if !loss.is_finite() {
        return Err(ModelError::NonFiniteLoss);
    }
    model.params.axpy_where(-step_size, &grads, is_transformer);
    head.axpy_where(-step_size, &head_grad, |_| true);
    Ok(loss)
}

/// Classification step on precomputed (frozen) front-end frames.
pub fn finetune_classify_step_frames<T: Scalar>(
    model: &mut EncoderModel<T>,
    head: &mut FineTuneHead<T>,
    frames: &Matrix<T>,
    label: usize,
    step_size: T,
) -> Result<T, ModelError> {
    head_step(model, head, frames, HeadTarget::Class(label), step_size)
}

/// Mean-pool → linear → softmax cross-entropy; updates transformer and head,
/// leaves the conv front end untouched. Returns the pre-update loss.
pub fn finetune_classify_step<T: Scalar>(
    model: &mut EncoderModel<T>,
    head: &mut FineTuneHead<T>,
    clip: &AudioClip<T>,
    label: usize,
    step_size: T,
) -> Result<T, ModelError> {
    let frames = model.conv_frontend(clip)?;
    finetune_classify_step_frames(model, head, &frames, label, step_size)
}

pub fn finetune_detect_step_frames<T: Scalar>(
    model: &mut EncoderModel<T>,
    head: &mut FineTuneHead<T>,
    frames: &Matrix<T>,
    targets: &[T],
    step_size: T,
) -> Result<T, ModelError> {
    head_step(model, head, frames, HeadTarget::Labels(targets), step_size)
}

/// Multi-label variant with per-class sigmoid and mean binary cross-entropy.
pub fn finetune_detect_step<T: Scalar>(
    model: &mut EncoderModel<T>,
    head: &mut FineTuneHead<T>,
    clip: &AudioClip<T>,
    targets: &[T],
    step_size: T,
) -> Result<T, ModelError> {
    let frames = model.conv_frontend(clip)?;
    finetune_detect_step_frames(model, head, &frames, targets, step_size)
}
