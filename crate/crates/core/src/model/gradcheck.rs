use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::ParamSet;
use super::ModelError;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckOptions {
    pub eps: f64,
    /// Check a seeded random subset of this many parameters instead of all.
    pub max_params: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { eps: 1e-5, max_params: None, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport<T> {
    pub max_rel_error: T,
    pub worst_index: usize,
    pub checked: usize,
}

/// `|a − b| / max(1e-8, |a| + |b|)`
pub fn relative_error<T: Scalar>(analytic: T, numeric: T) -> T {
    (analytic - numeric).abs() / T::of(1e-8).max(analytic.abs() + numeric.abs())
}

/// Compares `analytic` against central differences of `loss` around `params`.
pub fn grad_check<T: Scalar, P: ParamSet<T>>(
    params: &P,
    analytic: &P,
    loss: impl Fn(&P) -> Result<T, ModelError>,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport<T>, ModelError> {
    let base = params.flatten();
    let grad = analytic.flatten();
    assert_eq!(base.len(), grad.len(), "gradient shape differs from parameters");
    let indices: Vec<usize> = match opts.max_params {
        Some(n) if n < base.len() => {
            let mut idx = sample(&mut ChaCha8Rng::seed_from_u64(opts.seed), base.len(), n).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..base.len()).collect(),
    };
    let eps = T::of(opts.eps);
    let mut probe = params.clone();
    let mut flat = base.clone();
    let mut eval = |flat: &[T]| -> Result<T, ModelError> {
        probe.assign_flat(flat);
        let l = loss(&probe)?;
        if l.is_finite() { Ok(l) } else { Err(ModelError::NonFiniteLoss) }
    };
    eval(&flat)?;
    let mut report = GradCheckReport { max_rel_error: T::zero(), worst_index: 0, checked: indices.len() };
    for &i in &indices {
        flat[i] = base[i] + eps;
        let up = eval(&flat)?;
        flat[i] = base[i] - eps;
        let down = eval(&flat)?;
        flat[i] = base[i];
        let numeric = (up - down) / (eps + eps);
        let err = relative_error(grad[i], numeric);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = i;
        }
    }
    Ok(report)
}
