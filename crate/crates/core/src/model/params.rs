use rand::Rng;
use rand_distr::StandardNormal;

use super::config::EncoderConfig;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// A collection of named parameter tensors that can be updated as a unit.
pub trait ParamSet<T: Scalar>: Clone {
    fn tensors(&self) -> Vec<(String, &Matrix<T>)>;
    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<T>)>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.tensors_mut() {
            t.as_mut_slice().fill(T::zero());
        }
        z
    }

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.as_slice().len()).sum()
    }

    fn flatten(&self) -> Vec<T> {
        self.tensors().into_iter().flat_map(|(_, t)| t.as_slice().to_vec()).collect()
    }

    /// Panics if `flat` is not `param_count()` long.
    fn assign_flat(&mut self, flat: &[T]) {
        let mut at = 0;
        for (_, t) in self.tensors_mut() {
            let n = t.as_slice().len();
            t.as_mut_slice().copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        assert_eq!(at, flat.len(), "flat parameter length mismatch");
    }

    /// `self += alpha · other` for every tensor accepted by `filter`.
    fn axpy_where(&mut self, alpha: T, other: &Self, filter: impl Fn(&str) -> bool) {
        let others = other.tensors();
        for ((name, t), (_, o)) in self.tensors_mut().into_iter().zip(others) {
            if filter(&name) {
                t.axpy(alpha, o);
            }
        }
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.all_finite())
    }
}

/// A single tensor is a parameter set of its own.
impl<T: Scalar> ParamSet<T> for Matrix<T> {
    fn tensors(&self) -> Vec<(String, &Matrix<T>)> {
        vec![("value".into(), self)]
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<T>)> {
        vec![("value".into(), self)]
    }
}

pub(crate) fn gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, std: f64) -> Matrix<T> {
    let data = (0..rows * cols)
        .map(|_| T::of(rng.sample::<f64, _>(StandardNormal) * std))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

/// Affine map `y = x·W + b` with `W` stored in × out.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<T> {
    pub weight: Matrix<T>,
    pub bias: Matrix<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn init<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: gaussian(rng, fan_in, fan_out, 1.0 / (fan_in as f64).sqrt()),
            bias: Matrix::zeros(1, fan_out),
        }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weight: Matrix::zeros(fan_in, fan_out), bias: Matrix::zeros(1, fan_out) }
    }

    pub fn forward(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut y = x.matmul(&self.weight);
        y.add_row_broadcast(self.bias.as_slice());
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &Matrix<T>, dy: &Matrix<T>, grad: &mut Linear<T>) -> Matrix<T> {
        grad.weight.add_assign(&x.t_matmul(dy));
        for (g, s) in grad.bias.as_mut_slice().iter_mut().zip(dy.column_sums()) {
            *g = *g + s;
        }
        dy.matmul_t(&self.weight)
    }

    fn push<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Matrix<T>)>) {
        out.push((format!("{prefix}.weight"), &self.weight));
        out.push((format!("{prefix}.bias"), &self.bias));
    }

    fn push_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Matrix<T>)>) {
        out.push((format!("{prefix}.weight"), &mut self.weight));
        out.push((format!("{prefix}.bias"), &mut self.bias));
    }
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorm<T> {
    pub gain: Matrix<T>,
    pub bias: Matrix<T>,
}

pub(crate) struct LayerNormCache<T> {
    normalized: Matrix<T>,
    inv_std: Vec<T>,
}

impl<T: Scalar> LayerNorm<T> {
    pub fn new(d: usize) -> Self {
        Self { gain: Matrix::filled(1, d, T::one()), bias: Matrix::zeros(1, d) }
    }

    pub(crate) fn forward(&self, x: &Matrix<T>) -> (Matrix<T>, LayerNormCache<T>) {
        let d = T::count(x.cols());
        let mut normalized = Matrix::zeros(x.rows(), x.cols());
        let mut out = Matrix::zeros(x.rows(), x.cols());
        let mut inv_std = Vec::with_capacity(x.rows());
        for r in 0..x.rows() {
            let row = x.row(r);
            let mean = row.iter().fold(T::zero(), |a, &v| a + v) / d;
            let var = row.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / d;
            let inv = T::one() / (var + T::of(LAYER_NORM_EPS)).sqrt();
            inv_std.push(inv);
            for c in 0..x.cols() {
                let n = (row[c] - mean) * inv;
                normalized.set(r, c, n);
                out.set(r, c, n * self.gain.as_slice()[c] + self.bias.as_slice()[c]);
            }
        }
        (out, LayerNormCache { normalized, inv_std })
    }

    pub(crate) fn backward(&self, cache: &LayerNormCache<T>, dy: &Matrix<T>, grad: &mut LayerNorm<T>) -> Matrix<T> {
        let (rows, cols) = dy.shape();
        let d = T::count(cols);
        let mut dx = Matrix::zeros(rows, cols);
        let gain = self.gain.as_slice();
        for r in 0..rows {
            let xhat = cache.normalized.row(r);
            let dyr = dy.row(r);
            let mut sum_dxhat = T::zero();
            let mut sum_dxhat_xhat = T::zero();
            for c in 0..cols {
                let g = &mut grad.gain.as_mut_slice()[c];
                *g = *g + dyr[c] * xhat[c];
                let b = &mut grad.bias.as_mut_slice()[c];
                *b = *b + dyr[c];
                let dxhat = dyr[c] * gain[c];
                sum_dxhat = sum_dxhat + dxhat;
                sum_dxhat_xhat = sum_dxhat_xhat + dxhat * xhat[c];
            }
            let inv = cache.inv_std[r];
            for c in 0..cols {
                let dxhat = dyr[c] * gain[c];
                dx.set(r, c, inv * (dxhat - sum_dxhat / d - xhat[c] * sum_dxhat_xhat / d));
            }
        }
        dx
    }
}

/// Weight stored out × (in · kernel), input-channel major.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams<T> {
    pub weight: Matrix<T>,
    pub bias: Matrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockParams<T> {
    pub ln1: LayerNorm<T>,
    pub wq: Linear<T>,
    pub wk: Linear<T>,
    pub wv: Linear<T>,
    pub wo: Linear<T>,
    pub ln2: LayerNorm<T>,
    pub ff1: Linear<T>,
    pub ff2: Linear<T>,
}

/// Every trainable tensor of the encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams<T> {
    pub conv: Vec<ConvParams<T>>,
    /// Final linear map of the front end, conv channels → d_model.
    pub frontend_proj: Linear<T>,
    /// Replaces front-end output at masked frames.
    pub mask_emb: Matrix<T>,
    pub blocks: Vec<BlockParams<T>>,
    /// d_model → proj_dim, compared against unit embeddings.
    pub out_proj: Linear<T>,
    /// k_units × proj_dim, rows kept at unit length.
    pub unit_emb: Matrix<T>,
}

/// Names of front-end tensors start with one of these; they stay frozen while fine-tuning.
pub const FRONTEND_PREFIXES: [&str; 2] = ["conv.", "frontend."];

pub fn is_frontend(name: &str) -> bool {
    FRONTEND_PREFIXES.iter().any(|p| name.starts_with(p))
}

pub fn is_transformer(name: &str) -> bool {
    name.starts_with("blocks.")
}

impl<T: Scalar> EncoderParams<T> {
    pub fn init<R: Rng + ?Sized>(cfg: &EncoderConfig, rng: &mut R) -> Self {
        let mut conv = Vec::with_capacity(cfg.conv_layers.len());
        let mut in_ch = 1;
        for spec in &cfg.conv_layers {
            let fan_in = in_ch * spec.kernel;
            conv.push(ConvParams {
                weight: gaussian(rng, spec.channels, fan_in, (2.0 / fan_in as f64).sqrt()),
                bias: Matrix::zeros(1, spec.channels),
            });
            in_ch = spec.channels;
        }
        let d = cfg.d_model;
        let frontend_proj = Linear::init(rng, in_ch, d);
        let mask_emb = gaussian(rng, 1, d, 0.5);
        let blocks = (0..cfg.n_layers)
            .map(|_| BlockParams {
                ln1: LayerNorm::new(d),
                wq: Linear::init(rng, d, d),
                wk: Linear::init(rng, d, d),
                wv: Linear::init(rng, d, d),
                wo: Linear::init(rng, d, d),
                ln2: LayerNorm::new(d),
                ff1: Linear::init(rng, d, cfg.d_ff),
                ff2: Linear::init(rng, cfg.d_ff, d),
            })
            .collect();
        let out_proj = Linear::init(rng, d, cfg.proj_dim);
        let mut unit_emb = gaussian(rng, cfg.k_units, cfg.proj_dim, 1.0);
        normalize_rows(&mut unit_emb);
        Self { conv, frontend_proj, mask_emb, blocks, out_proj, unit_emb }
    }
}

pub(crate) fn normalize_rows<T: Scalar>(m: &mut Matrix<T>) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let n = crate::linalg::l2_norm(row);
        if n > T::zero() {
            row.iter_mut().for_each(|v| *v = *v / n);
        }
    }
}

impl<T: Scalar> ParamSet<T> for EncoderParams<T> {
    fn tensors(&self) -> Vec<(String, &Matrix<T>)> {
        let mut out = Vec::new();
        for (i, c) in self.conv.iter().enumerate() {
            out.push((format!("conv.{i}.weight"), &c.weight));
            out.push((format!("conv.{i}.bias"), &c.bias));
        }
        self.frontend_proj.push("frontend.proj", &mut out);
        out.push(("mask_emb".into(), &self.mask_emb));
        for (l, b) in self.blocks.iter().enumerate() {
            let p = format!("blocks.{l}");
            out.push((format!("{p}.ln1.gain"), &b.ln1.gain));
            out.push((format!("{p}.ln1.bias"), &b.ln1.bias));
            b.wq.push(&format!("{p}.wq"), &mut out);
            b.wk.push(&format!("{p}.wk"), &mut out);
            b.wv.push(&format!("{p}.wv"), &mut out);
            b.wo.push(&format!("{p}.wo"), &mut out);
            out.push((format!("{p}.ln2.gain"), &b.ln2.gain));
            out.push((format!("{p}.ln2.bias"), &b.ln2.bias));
            b.ff1.push(&format!("{p}.ff1"), &mut out);
            b.ff2.push(&format!("{p}.ff2"), &mut out);
        }
        self.out_proj.push("out_proj", &mut out);
        out.push(("unit_emb".into(), &self.unit_emb));
        out
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<T>)> {
        let mut out = Vec::new();
        for (i, c) in self.conv.iter_mut().enumerate() {
            out.push((format!("conv.{i}.weight"), &mut c.weight));
            out.push((format!("conv.{i}.bias"), &mut c.bias));
        }
        self.frontend_proj.push_mut("frontend.proj", &mut out);
        out.push(("mask_emb".into(), &mut self.mask_emb));
        for (l, b) in self.blocks.iter_mut().enumerate() {
            let p = format!("blocks.{l}");
            out.push((format!("{p}.ln1.gain"), &mut b.ln1.gain));
            out.push((format!("{p}.ln1.bias"), &mut b.ln1.bias));
            b.wq.push_mut(&format!("{p}.wq"), &mut out);
            b.wk.push_mut(&format!("{p}.wk"), &mut out);
            b.wv.push_mut(&format!("{p}.wv"), &mut out);
            b.wo.push_mut(&format!("{p}.wo"), &mut out);
            out.push((format!("{p}.ln2.gain"), &mut b.ln2.gain));
            out.push((format!("{p}.ln2.bias"), &mut b.ln2.bias));
            b.ff1.push_mut(&format!("{p}.ff1"), &mut out);
            b.ff2.push_mut(&format!("{p}.ff2"), &mut out);
        }
        self.out_proj.push_mut("out_proj", &mut out);
        out.push(("unit_emb".into(), &mut self.unit_emb));
        out
    }
}

impl<T: Scalar> ParamSet<T> for Linear<T> {
    fn tensors(&self) -> Vec<(String, &Matrix<T>)> {
        let mut out = Vec::new();
        self.push("linear", &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<T>)> {
        let mut out = Vec::new();
        self.push_mut("linear", &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tensor_names_are_unique_and_flat_round_trips() {
        let cfg = EncoderConfig::for_rate(8_000, 4);
        let p: EncoderParams<f64> = EncoderParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
        let unique: std::collections::BTreeSet<_> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
        let flat = p.flatten();
        let mut q = p.zeros_like();
        assert!(q.flatten().iter().all(|&v| v == 0.0));
        q.assign_flat(&flat);
        assert_eq!(p, q);
        assert!(names.iter().filter(|n| is_frontend(n)).count() == 2 * cfg.conv_layers.len() + 2);
    }

    #[test]
    fn unit_embeddings_start_normalized() {
        let cfg = EncoderConfig::for_rate(8_000, 6);
        let p: EncoderParams<f64> = EncoderParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(2));
        for r in p.unit_emb.iter_rows() {
            assert!((crate::linalg::l2_norm(r) - 1.0).abs() < 1e-12);
        }
    }
}
