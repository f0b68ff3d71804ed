//! Acoustic unit discovery: k-means codebooks over MFCC frames (stage 1) or
//! encoder hidden states (stage 2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{squared_distance, Matrix};
use crate::model::{EncoderModel, ModelError};
use crate::scalar::Scalar;
use crate::signal::AudioClip;

#[derive(Debug, Error)]
pub enum UnitsError {
    #[error("{n} points cannot form {k} clusters")]
    TooFewPoints { n: usize, k: usize },
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("feature dimension {got} does not match codebook dimension {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which features a codebook was fitted on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// MFCC frames.
    Mfcc = 1,
    /// Encoder hidden states.
    Hidden = 2,
}

impl Stage {
    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Stage::Mfcc),
            2 => Some(Stage::Hidden),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook<T> {
    /// k × dim
    pub centroids: Matrix<T>,
    pub stage: Stage,
    pub seed: u64,
}

impl<T: Scalar> Codebook<T> {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.cols()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KmeansOptions<T> {
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: T,
}

impl<T: Scalar> Default for KmeansOptions<T> {
    fn default() -> Self {
        Self { max_iter: 300, tol: T::of(1e-8) }
    }
}

pub const DEFAULT_K: usize = 16;

/// Nearest centroid and its squared distance; ties go to the lowest index.
fn nearest<T: Scalar>(centroids: &Matrix<T>, x: &[T]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (j, c) in centroids.iter_rows().enumerate() {
        let d = squared_distance(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn check_dim<T: Scalar>(cb: &Codebook<T>, features: &Matrix<T>) -> Result<(), UnitsError> {
    if features.cols() != cb.dim() {
        return Err(UnitsError::DimMismatch { expected: cb.dim(), got: features.cols() });
    }
    Ok(())
}

pub fn assign<T: Scalar>(cb: &Codebook<T>, features: &Matrix<T>) -> Result<Vec<usize>, UnitsError> {
    check_dim(cb, features)?;
    Ok(features.iter_rows().map(|x| nearest(&cb.centroids, x).0).collect())
}

/// Sum of squared distances from each point to its assigned centroid.
pub fn inertia<T: Scalar>(cb: &Codebook<T>, features: &Matrix<T>) -> Result<T, UnitsError> {
    check_dim(cb, features)?;
    Ok(features.iter_rows().map(|x| nearest(&cb.centroids, x).1).fold(T::zero(), |a, d| a + d))
}

fn kmeans_plus_plus<T: Scalar>(features: &Matrix<T>, k: usize, rng: &mut ChaCha8Rng) -> Matrix<T> {
    let n = features.rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = features
        .iter_rows()
        .map(|x| squared_distance(x, features.row(chosen[0])).as_f64())
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > r {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave r just above the running sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("positive mass"))
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, x) in features.iter_rows().enumerate() {
            d2[i] = d2[i].min(squared_distance(x, features.row(next)).as_f64());
        }
    }
    features.select_rows(&chosen)
}

/// k-means with k-means++ seeding; also returns the inertia after every assignment step.
pub fn kmeans_fit_traced<T: Scalar>(
    features: &Matrix<T>,
    k: usize,
    seed: u64,
    opts: &KmeansOptions<T>,
) -> Result<(Codebook<T>, Vec<T>), UnitsError> {
    let n = features.rows();
    if k == 0 {
        return Err(UnitsError::ZeroClusters);
    }
    if n < k {
        return Err(UnitsError::TooFewPoints { n, k });
    }
    let dim = features.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(features, k, &mut rng);
    let mut trace = Vec::new();

    for _ in 0..opts.max_iter {
        let assigned: Vec<(usize, T)> = features.iter_rows().map(|x| nearest(&centroids, x)).collect();
        trace.push(assigned.iter().fold(T::zero(), |a, &(_, d)| a + d));

        let mut sums = Matrix::<T>::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for (x, &(j, _)) in features.iter_rows().zip(&assigned) {
            counts[j] += 1;
            for (s, &v) in sums.row_mut(j).iter_mut().zip(x) {
                *s = *s + v;
            }
        }
        let mut spare: Vec<T> = assigned.iter().map(|&(_, d)| d).collect();
        let mut shift = T::zero();
        for j in 0..k {
            let new: Vec<T> = if counts[j] > 0 {
                let c = T::count(counts[j]);
                sums.row(j).iter().map(|&s| s / c).collect()
            } else {
                // re-seed an empty cluster at the point worst served by its centroid
                let far = spare
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, &d)| if d > spare[best] { i } else { best });
                spare[far] = T::neg_infinity();
                features.row(far).to_vec()
            };
            shift = shift.max(squared_distance(&new, centroids.row(j)).sqrt());
            centroids.row_mut(j).copy_from_slice(&new);
        }
        if shift < opts.tol {
            break;
        }
    }
    let cb = Codebook { centroids, stage: Stage::Mfcc, seed };
    trace.push(inertia(&cb, features)?);
    Ok((cb, trace))
}

pub fn kmeans_fit<T: Scalar>(
    features: &Matrix<T>,
    k: usize,
    seed: u64,
    opts: &KmeansOptions<T>,
) -> Result<Codebook<T>, UnitsError> {
    kmeans_fit_traced(features, k, seed, opts).map(|(cb, _)| cb)
}

/// Stage-2 codebook over the hidden states of `layer` for every clip.
pub fn refit_from_hidden<T: Scalar>(
    model: &EncoderModel<T>,
    clips: &[AudioClip<T>],
    layer: usize,
    k: usize,
    seed: u64,
) -> Result<Codebook<T>, UnitsError> {
    let hidden = clips
        .iter()
        .map(|c| model.hidden_states(c, layer))
        .collect::<Result<Vec<_>, _>>()?;
    let features = Matrix::vstack(&hidden);
    let mut cb = kmeans_fit(&features, k, seed, &KmeansOptions::default())?;
    cb.stage = Stage::Hidden;
    Ok(cb)
}

/// Maps per-frame labels at one hop onto `n_target` frames at another by
/// taking the source frame whose centre is nearest each target frame's centre.
/// Frame `i` of a sequence spans `[i·hop, i·hop + window)`.
pub fn resample_labels(
    labels: &[usize],
    src_hop_s: f64,
    src_window_s: f64,
    n_target: usize,
    target_hop_s: f64,
) -> Vec<usize> {
    if labels.is_empty() {
        return Vec::new();
    }
    (0..n_target)
        .map(|t| {
            let centre = (t as f64 + 0.5) * target_hop_s;
            let j = ((centre - 0.5 * src_window_s) / src_hop_s).round().max(0.0) as usize;
            labels[j.min(labels.len() - 1)]
        })
        .collect()
}
