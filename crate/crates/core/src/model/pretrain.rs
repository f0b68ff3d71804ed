use std::collections::BTreeSet;

use rand::Rng;

use super::encoder::{mask_spans, EncoderModel};
use super::params::{EncoderParams, ParamSet};
use super::ModelError;
use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;
use crate::signal::AudioClip;

// added to squared norms before the square root in cosine similarities
const NORM_DELTA: f64 = 1e-12;

/// Masked-prediction loss with the masked-frame accuracy it was computed on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskedOutcome<T> {
    pub loss: T,
    pub correct: usize,
    pub masked: usize,
}

impl<T: Scalar> MaskedOutcome<T> {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.masked.max(1) as f64
    }
}

impl<T: Scalar> EncoderModel<T> {
    fn check_targets(&self, frames: usize, labels: &[usize], mask: &BTreeSet<usize>) -> Result<(), ModelError> {
        if labels.len() != frames {
            return Err(ModelError::ShapeMismatch(format!("{} unit labels for {frames} frames", labels.len())));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= self.config.k_units) {
            return Err(ModelError::LabelOutOfRange { label, classes: self.config.k_units });
        }
        match mask.last() {
            None => Err(ModelError::EmptyMask),
            Some(&t) if t >= frames => Err(ModelError::ShapeMismatch(format!("mask position {t} beyond {frames} frames"))),
            _ => Ok(()),
        }
    }

    fn masked_core(
        &self,
        clip: &AudioClip<T>,
        labels: &[usize],
        mask: &BTreeSet<usize>,
        want_grad: bool,
    ) -> Result<(MaskedOutcome<T>, Option<EncoderParams<T>>), ModelError> {
        let (frames, fcache) = self.frontend_forward(clip)?;
        self.check_targets(frames.rows(), labels, mask)?;
        let x0 = self.embed(&frames, Some(mask));
        let stack = self.stack_forward(&x0, None);
        let h = stack.hidden.last().expect("at least one block");
        let proj = self.params.out_proj.forward(h);

        let inv_tau = T::one() / T::of(self.config.temperature);
        let delta = T::of(NORM_DELTA);
        let emb = &self.params.unit_emb;
        let k = emb.rows();
        let e_norms: Vec<T> = emb.iter_rows().map(|e| (dot(e, e) + delta).sqrt()).collect();
        let m = T::count(mask.len());

        let mut loss = T::zero();
        let mut correct = 0;
        let mut d_proj = Matrix::zeros(proj.rows(), proj.cols());
        let mut d_emb = Matrix::zeros(k, emb.cols());
        let mut cos = vec![T::zero(); k];
        let mut probs = vec![T::zero(); k];
        for &t in mask {
            let u = proj.row(t);
            let nu = (dot(u, u) + delta).sqrt();
            for c in 0..k {
                cos[c] = dot(u, emb.row(c)) / (nu * e_norms[c]);
                probs[c] = cos[c] * inv_tau;
            }
            let label = labels[t];
            let best = (0..k).fold(0, |b, c| if probs[c] > probs[b] { c } else { b });
            if best == label {
                correct += 1;
            }
            let max = probs.iter().fold(T::neg_infinity(), |a, &v| a.max(v));
            let lse = max + probs.iter().fold(T::zero(), |a, &v| a + (v - max).exp()).ln();
            loss = loss + lse - probs[label];
            if !want_grad {
                continue;
            }
            for p in probs.iter_mut() {
                *p = (*p - lse).exp();
            }
            let du = d_proj.row_mut(t);
            for c in 0..k {
                let indicator = if c == label { T::one() } else { T::zero() };
                let g = (probs[c] - indicator) / m * inv_tau;
                let e = emb.row(c);
                let ne = e_norms[c];
                for j in 0..u.len() {
                    du[j] = du[j] + g * (e[j] / (nu * ne) - cos[c] * u[j] / (nu * nu));
                }
                let de = d_emb.row_mut(c);
                for j in 0..u.len() {
                    de[j] = de[j] + g * (u[j] / (nu * ne) - cos[c] * e[j] / (ne * ne));
                }
            }
        }
        let outcome = MaskedOutcome { loss: loss / m, correct, masked: mask.len() };
        if !want_grad {
            return Ok((outcome, None));
        }

        let mut grads = self.params.zeros_like();
        grads.unit_emb = d_emb;
        let d_h = self.params.out_proj.backward(h, &d_proj, &mut grads.out_proj);
        let d_x0 = self.stack_backward(&stack, &d_h, &mut grads);
        let mut d_frames = d_x0;
        d_frames.scale(self.embed_scale());
        for &t in mask {
            grads.mask_emb.axpy(T::one(), &Matrix::from_vec(1, d_frames.cols(), d_frames.row(t).to_vec()));
            d_frames.row_mut(t).fill(T::zero());
        }
        self.frontend_backward(&fcache, &d_frames, &mut grads);
        Ok((outcome, Some(grads)))
    }

    /// Mean cross-entropy of cosine-similarity logits over the masked frames.
    pub fn masked_loss(&self, clip: &AudioClip<T>, labels: &[usize], mask: &BTreeSet<usize>) -> Result<MaskedOutcome<T>, ModelError> {
        self.masked_core(clip, labels, mask, false).map(|(o, _)| o)
    }

    pub fn masked_loss_and_grad(
        &self,
        clip: &AudioClip<T>,
        labels: &[usize],
        mask: &BTreeSet<usize>,
    ) -> Result<(MaskedOutcome<T>, EncoderParams<T>), ModelError> {
        self.masked_core(clip, labels, mask, true).map(|(o, g)| (o, g.expect("gradient requested")))
    }
}

/// One gradient-descent step on the masked-prediction objective over every
/// parameter. Returns the pre-update outcome.
pub fn pretrain_step_with_stats<T: Scalar, R: Rng + ?Sized>(
    model: &mut EncoderModel<T>,
    clip: &AudioClip<T>,
    unit_labels: &[usize],
    rng: &mut R,
    step_size: T,
) -> Result<MaskedOutcome<T>, ModelError> {
    let frames = model.frame_count(clip.len());
    let mask = mask_spans(frames, &model.config, rng);
    let (outcome, grads) = model.masked_loss_and_grad(clip, unit_labels, &mask)?;
    if !outcome.loss.is_finite() {
        return Err(ModelError::NonFiniteLoss);
    }
    model.params.axpy_where(-step_size, &grads, |_| true);
    model.renormalize_units();
    Ok(outcome)
}

/// [`pretrain_step_with_stats`] returning only the loss.
pub fn pretrain_step<T: Scalar, R: Rng + ?Sized>(
    model: &mut EncoderModel<T>,
    clip: &AudioClip<T>,
    unit_labels: &[usize],
    rng: &mut R,
    step_size: T,
) -> Result<T, ModelError> {
    pretrain_step_with_stats(model, clip, unit_labels, rng, step_size).map(|o| o.loss)
}
