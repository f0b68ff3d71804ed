use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::attention::{attention_backward, attention_forward, positional_encoding};
use super::config::EncoderConfig;
use super::params::{BlockParams, EncoderParams, LayerNormCache, ParamSet};
use super::ModelError;
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::signal::AudioClip;

/// Conv front end, transformer encoder, and masked-prediction head.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderModel<T> {
    pub config: EncoderConfig,
    pub params: EncoderParams<T>,
    pub seed: u64,
    pe: Matrix<T>,
}

pub(crate) struct ConvCache<T> {
    patches: Matrix<T>,
    pre: Matrix<T>,
    in_len: usize,
    in_ch: usize,
    pad_left: usize,
}

pub(crate) struct FrontendCache<T> {
    convs: Vec<ConvCache<T>>,
    last: Matrix<T>,
}

pub(crate) struct HeadCache<T> {
    q: Matrix<T>,
    k: Matrix<T>,
    v: Matrix<T>,
    weights: Matrix<T>,
}

pub(crate) struct BlockCache<T> {
    ln1: LayerNormCache<T>,
    ln1_out: Matrix<T>,
    heads: Vec<HeadCache<T>>,
    concat: Matrix<T>,
    ln2: LayerNormCache<T>,
    ln2_out: Matrix<T>,
    ff_pre: Matrix<T>,
    ff_act: Matrix<T>,
}

/// Per-block outputs (the hidden representations) and what backward needs.
pub(crate) struct StackOutput<T> {
    pub hidden: Vec<Matrix<T>>,
    pub caches: Vec<BlockCache<T>>,
}

const GELU_C: f64 = 0.7978845608028654; // sqrt(2/pi)
const GELU_A: f64 = 0.044715;

fn gelu<T: Scalar>(x: T) -> T {
    let inner = T::of(GELU_C) * (x + T::of(GELU_A) * x * x * x);
    T::of(0.5) * x * (T::one() + inner.tanh())
}

fn gelu_grad<T: Scalar>(x: T) -> T {
    let inner = T::of(GELU_C) * (x + T::of(GELU_A) * x * x * x);
    let t = inner.tanh();
    let d_inner = T::of(GELU_C) * (T::one() + T::of(3.0 * GELU_A) * x * x);
    T::of(0.5) * (T::one() + t) + T::of(0.5) * x * (T::one() - t * t) * d_inner
}

fn split_cols<T: Scalar>(m: &Matrix<T>, start: usize, width: usize) -> Matrix<T> {
    let mut out = Matrix::zeros(m.rows(), width);
    for r in 0..m.rows() {
        out.row_mut(r).copy_from_slice(&m.row(r)[start..start + width]);
    }
    out
}

fn write_cols<T: Scalar>(dst: &mut Matrix<T>, src: &Matrix<T>, start: usize) {
    for r in 0..src.rows() {
        dst.row_mut(r)[start..start + src.cols()].copy_from_slice(src.row(r));
    }
}

/// Sets of positions masked by span sampling: every frame starts a span with
/// probability `mask_start_prob`; spans are `mask_span` long, clipped at `frames`.
pub fn mask_spans<R: Rng + ?Sized>(frames: usize, cfg: &EncoderConfig, rng: &mut R) -> BTreeSet<usize> {
    let mut masked = BTreeSet::new();
    for start in 0..frames {
        if rng.random::<f64>() < cfg.mask_start_prob {
            masked.extend(start..(start + cfg.mask_span).min(frames));
        }
    }
    masked
}

impl<T: Scalar> EncoderModel<T> {
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = EncoderParams::init(&config, &mut rng);
        Self::from_params(config, params, seed)
    }

    /// Rebuilds a model around existing parameters (e.g. from a checkpoint).
    pub fn from_params(config: EncoderConfig, params: EncoderParams<T>, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let reference: EncoderParams<T> = EncoderParams::init(&config, &mut ChaCha8Rng::seed_from_u64(0));
        let shapes_match = reference
            .tensors()
            .iter()
            .zip(params.tensors())
            .all(|((a, x), (b, y))| a == &b && x.shape() == y.shape())
            && reference.tensors().len() == params.tensors().len();
        if !shapes_match {
            return Err(ModelError::ShapeMismatch("parameters do not match configuration".into()));
        }
        let pe = positional_encoding(config.max_pos, config.d_model)?;
        Ok(Self { config, params, seed, pe })
    }

    pub fn depth(&self) -> usize {
        self.config.n_layers
    }

    /// Number of output frames for a clip of `n_samples`.
    pub fn frame_count(&self, n_samples: usize) -> usize {
        self.config.conv_layers.iter().fold(n_samples, |len, c| len.div_ceil(c.stride))
    }

    fn check_clip(&self, clip: &AudioClip<T>) -> Result<(), ModelError> {
        if clip.sample_rate() != self.config.sample_rate {
            return Err(ModelError::RateMismatch { expected: self.config.sample_rate, got: clip.sample_rate() });
        }
        let needed = self.config.receptive_field();
        if clip.len() < needed {
            return Err(ModelError::ClipTooShort { len: clip.len(), needed });
        }
        let frames = self.frame_count(clip.len());
        if frames > self.config.max_pos {
            return Err(ModelError::SequenceTooLong { frames, max_pos: self.config.max_pos });
        }
        Ok(())
    }

    pub(crate) fn frontend_forward(&self, clip: &AudioClip<T>) -> Result<(Matrix<T>, FrontendCache<T>), ModelError> {
        self.check_clip(clip)?;
        let mut x = Matrix::from_vec(clip.len(), 1, clip.samples().to_vec());
        let mut convs = Vec::with_capacity(self.config.conv_layers.len());
        for (spec, p) in self.config.conv_layers.iter().zip(&self.params.conv) {
            let (in_len, in_ch) = x.shape();
            let (k, s) = (spec.kernel, spec.stride);
            let out_len = in_len.div_ceil(s);
            let pad_total = ((out_len - 1) * s + k).saturating_sub(in_len);
            let pad_left = pad_total / 2;
            let mut patches = Matrix::zeros(out_len, in_ch * k);
            for t in 0..out_len {
                let row = patches.row_mut(t);
                for j in 0..k {
                    let src = (t * s + j) as isize - pad_left as isize;
                    if src < 0 || src as usize >= in_len {
                        continue;
                    }
                    let src_row = x.row(src as usize);
                    for i in 0..in_ch {
                        row[i * k + j] = src_row[i];
                    }
                }
            }
            let mut pre = patches.matmul_t(&p.weight);
            pre.add_row_broadcast(p.bias.as_slice());
            x = pre.map(|v| v.max(T::zero()));
            convs.push(ConvCache { patches, pre, in_len, in_ch, pad_left });
        }
        let out = self.params.frontend_proj.forward(&x);
        Ok((out, FrontendCache { convs, last: x }))
    }

    /// Front-end representations, frames × d_model, at 50 frames per second.
    pub fn conv_frontend(&self, clip: &AudioClip<T>) -> Result<Matrix<T>, ModelError> {
        self.frontend_forward(clip).map(|(out, _)| out)
    }

    pub(crate) fn frontend_backward(&self, cache: &FrontendCache<T>, d_out: &Matrix<T>, grads: &mut EncoderParams<T>) {
        let mut d_x = self.params.frontend_proj.backward(&cache.last, d_out, &mut grads.frontend_proj);
        for (l, (spec, c)) in self.config.conv_layers.iter().zip(&cache.convs).enumerate().rev() {
            let mut d_pre = d_x;
            for (d, &p) in d_pre.as_mut_slice().iter_mut().zip(c.pre.as_slice()) {
                if p <= T::zero() {
                    *d = T::zero();
                }
            }
            grads.conv[l].weight.add_assign(&d_pre.t_matmul(&c.patches));
            for (g, s) in grads.conv[l].bias.as_mut_slice().iter_mut().zip(d_pre.column_sums()) {
                *g = *g + s;
            }
            if l == 0 {
                break;
            }
            let d_patches = d_pre.matmul(&self.params.conv[l].weight);
            let (k, s) = (spec.kernel, spec.stride);
            let mut d_in = Matrix::zeros(c.in_len, c.in_ch);
            for t in 0..d_patches.rows() {
                let row = d_patches.row(t);
                for j in 0..k {
                    let src = (t * s + j) as isize - c.pad_left as isize;
                    if src < 0 || src as usize >= c.in_len {
                        continue;
                    }
                    let dst = d_in.row_mut(src as usize);
                    for i in 0..c.in_ch {
                        dst[i] = dst[i] + row[i * k + j];
                    }
                }
            }
            d_x = d_in;
        }
    }

    /// Multiplier on frame vectors before positional encodings are added.
    pub(crate) fn embed_scale(&self) -> T {
        T::count(self.config.d_model).sqrt()
    }

    /// Applies the optional mask, scales by √d_model and adds positional encodings.
    pub(crate) fn embed(&self, frames: &Matrix<T>, mask: Option<&BTreeSet<usize>>) -> Matrix<T> {
        let mut x = frames.clone();
        if let Some(mask) = mask {
            for &t in mask {
                x.row_mut(t).copy_from_slice(self.params.mask_emb.as_slice());
            }
        }
        let scale = self.embed_scale();
        for t in 0..x.rows() {
            for (v, &p) in x.row_mut(t).iter_mut().zip(self.pe.row(t)) {
                *v = *v * scale + p;
            }
        }
        x
    }

    fn block_forward(&self, b: &BlockParams<T>, x: &Matrix<T>) -> (Matrix<T>, BlockCache<T>) {
        let dh = self.config.head_dim();
        let (ln1_out, ln1) = b.ln1.forward(x);
        let q = b.wq.forward(&ln1_out);
        let k = b.wk.forward(&ln1_out);
        let v = b.wv.forward(&ln1_out);
        let mut concat = Matrix::zeros(x.rows(), self.config.d_model);
        let mut heads = Vec::with_capacity(self.config.n_heads);
        for h in 0..self.config.n_heads {
            let (qh, kh, vh) = (split_cols(&q, h * dh, dh), split_cols(&k, h * dh, dh), split_cols(&v, h * dh, dh));
            let att = attention_forward(&qh, &kh, &vh, None);
            write_cols(&mut concat, &att.out, h * dh);
            heads.push(HeadCache { q: qh, k: kh, v: vh, weights: att.weights });
        }
        let mut x1 = b.wo.forward(&concat);
        x1.add_assign(x);
        let (ln2_out, ln2) = b.ln2.forward(&x1);
        let ff_pre = b.ff1.forward(&ln2_out);
        let ff_act = ff_pre.map(gelu);
        let mut x2 = b.ff2.forward(&ff_act);
        x2.add_assign(&x1);
        (x2, BlockCache { ln1, ln1_out, heads, concat, ln2, ln2_out, ff_pre, ff_act })
    }

    fn block_backward(&self, l: usize, cache: &BlockCache<T>, d_out: &Matrix<T>, grads: &mut EncoderParams<T>) -> Matrix<T> {
        let b = &self.params.blocks[l];
        let g = &mut grads.blocks[l];
        let dh = self.config.head_dim();

        let d_act = b.ff2.backward(&cache.ff_act, d_out, &mut g.ff2);
        let mut d_pre = d_act;
        for (d, &u) in d_pre.as_mut_slice().iter_mut().zip(cache.ff_pre.as_slice()) {
            *d = *d * gelu_grad(u);
        }
        let d_ln2 = b.ff1.backward(&cache.ln2_out, &d_pre, &mut g.ff1);
        let mut d_x1 = b.ln2.backward(&cache.ln2, &d_ln2, &mut g.ln2);
        d_x1.add_assign(d_out);

        let d_concat = b.wo.backward(&cache.concat, &d_x1, &mut g.wo);
        let rows = d_concat.rows();
        let (mut dq, mut dk, mut dv) =
            (Matrix::zeros(rows, self.config.d_model), Matrix::zeros(rows, self.config.d_model), Matrix::zeros(rows, self.config.d_model));
        for (h, hc) in cache.heads.iter().enumerate() {
            let d_head = split_cols(&d_concat, h * dh, dh);
            let (dqh, dkh, dvh) = attention_backward(&hc.q, &hc.k, &hc.v, &hc.weights, &d_head);
            write_cols(&mut dq, &dqh, h * dh);
            write_cols(&mut dk, &dkh, h * dh);
            write_cols(&mut dv, &dvh, h * dh);
        }
        let mut d_ln1 = b.wq.backward(&cache.ln1_out, &dq, &mut g.wq);
        d_ln1.add_assign(&b.wk.backward(&cache.ln1_out, &dk, &mut g.wk));
        d_ln1.add_assign(&b.wv.backward(&cache.ln1_out, &dv, &mut g.wv));
        let mut d_x = b.ln1.backward(&cache.ln1, &d_ln1, &mut g.ln1);
        d_x.add_assign(&d_x1);
        d_x
    }

    /// Runs the first `upto` blocks (all when `None`).
    pub(crate) fn stack_forward(&self, x0: &Matrix<T>, upto: Option<usize>) -> StackOutput<T> {
        let n = upto.unwrap_or(self.config.n_layers);
        let mut hidden = Vec::with_capacity(n);
        let mut caches = Vec::with_capacity(n);
        let mut x = x0.clone();
        for b in &self.params.blocks[..n] {
            let (y, c) = self.block_forward(b, &x);
            caches.push(c);
            hidden.push(y.clone());
            x = y;
        }
        StackOutput { hidden, caches }
    }

    /// Back-propagates from the final hidden layer to the stack input.
    pub(crate) fn stack_backward(&self, out: &StackOutput<T>, d_final: &Matrix<T>, grads: &mut EncoderParams<T>) -> Matrix<T> {
        let mut d = d_final.clone();
        for l in (0..out.caches.len()).rev() {
            d = self.block_backward(l, &out.caches[l], &d, grads);
        }
        d
    }

    /// Transformer input for precomputed front-end frames, without masking.
    pub fn hidden_from_frames(&self, frames: &Matrix<T>, layer: usize) -> Result<Matrix<T>, ModelError> {
        if layer >= self.depth() {
            return Err(ModelError::LayerOutOfRange { layer, depth: self.depth() });
        }
        let x0 = self.embed(frames, None);
        let mut out = self.stack_forward(&x0, Some(layer + 1));
        Ok(out.hidden.pop().expect("at least one block"))
    }

    /// Hidden representations h_t after block `layer` (0-based).
    pub fn hidden_states(&self, clip: &AudioClip<T>, layer: usize) -> Result<Matrix<T>, ModelError> {
        if layer >= self.depth() {
            return Err(ModelError::LayerOutOfRange { layer, depth: self.depth() });
        }
        let frames = self.conv_frontend(clip)?;
        self.hidden_from_frames(&frames, layer)
    }

    /// Output of the final block, unmasked.
    pub fn encode(&self, clip: &AudioClip<T>) -> Result<Matrix<T>, ModelError> {
        self.hidden_states(clip, self.depth() - 1)
    }

    pub(crate) fn renormalize_units(&mut self) {
        super::params::normalize_rows(&mut self.params.unit_emb);
    }
}

/// One exported row: clip id, frame index, and the hidden vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingRow<T> {
    pub clip_id: String,
    pub frame: usize,
    pub values: Vec<T>,
}

/// Flattens hidden representations of `layer` for every clip, in clip then frame order.
pub fn export_embeddings<T: Scalar>(
    model: &EncoderModel<T>,
    clips: &[AudioClip<T>],
    layer: usize,
) -> Result<Vec<EmbeddingRow<T>>, ModelError> {
    if layer >= model.depth() {
        return Err(ModelError::LayerOutOfRange { layer, depth: model.depth() });
    }
    let mut rows = Vec::new();
    for clip in clips {
        let h = model.hidden_states(clip, layer)?;
        rows.extend(h.iter_rows().enumerate().map(|(frame, v)| EmbeddingRow {
            clip_id: clip.source_id().to_string(),
            frame,
            values: v.to_vec(),
        }));
    }
    Ok(rows)
}
