use super::ModelError;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Sinusoidal positions: `PE[pos][2i] = sin(pos / 10000^(2i/d))`,
/// `PE[pos][2i+1] = cos(pos / 10000^(2i/d))`.
pub fn positional_encoding<T: Scalar>(max_pos: usize, d_model: usize) -> Result<Matrix<T>, ModelError> {
    if !d_model.is_multiple_of(2) {
        return Err(ModelError::OddDim(d_model));
    }
    let mut pe = Matrix::zeros(max_pos, d_model);
    let base = T::of(10_000.0);
    for pos in 0..max_pos {
        for i in 0..d_model / 2 {
            let angle = T::count(pos) / base.powf(T::count(2 * i) / T::count(d_model));
            pe.set(pos, 2 * i, angle.sin());
            pe.set(pos, 2 * i + 1, angle.cos());
        }
    }
    Ok(pe)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows<T: Scalar>(scores: &Matrix<T>) -> Matrix<T> {
    let mut out = scores.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

pub(crate) fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum = sum + *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

/// Attention output together with its softmax weights.
pub(crate) struct AttentionOut<T> {
    pub out: Matrix<T>,
    pub weights: Matrix<T>,
}

pub(crate) fn attention_forward<T: Scalar>(q: &Matrix<T>, k: &Matrix<T>, v: &Matrix<T>, score_bias: Option<T>) -> AttentionOut<T> {
    let scale = T::one() / T::count(q.cols()).sqrt();
    let mut scores = q.matmul_t(k);
    let bias = score_bias.unwrap_or_else(T::zero);
    for s in scores.as_mut_slice() {
        *s = *s * scale + bias;
    }
    let weights = softmax_rows(&scores);
    AttentionOut { out: weights.matmul(v), weights }
}

/// Gradients `(dQ, dK, dV)` given the upstream gradient of the output.
pub(crate) fn attention_backward<T: Scalar>(
    q: &Matrix<T>,
    k: &Matrix<T>,
    v: &Matrix<T>,
    weights: &Matrix<T>,
    d_out: &Matrix<T>,
) -> (Matrix<T>, Matrix<T>, Matrix<T>) {
    let scale = T::one() / T::count(q.cols()).sqrt();
    let dv = weights.t_matmul(d_out);
    let dp = d_out.matmul_t(v);
    let mut ds = Matrix::zeros(weights.rows(), weights.cols());
    for r in 0..weights.rows() {
        let p = weights.row(r);
        let g = dp.row(r);
        let inner = crate::linalg::dot(p, g);
        for (c, d) in ds.row_mut(r).iter_mut().enumerate() {
            *d = p[c] * (g[c] - inner) * scale;
        }
    }
    (ds.matmul(k), ds.t_matmul(q), dv)
}

fn check_shapes<T: Scalar>(q: &Matrix<T>, k: &Matrix<T>, v: &Matrix<T>) -> Result<(), ModelError> {
    if q.cols() == 0 || q.cols() != k.cols() || k.rows() != v.rows() || k.rows() == 0 {
        return Err(ModelError::ShapeMismatch(format!(
            "Q {:?}, K {:?}, V {:?}",
            q.shape(),
            k.shape(),
            v.shape()
        )));
    }
    Ok(())
}

/// `softmax(Q·Kᵀ / √d_k) · V`.
pub fn scaled_dot_attention<T: Scalar>(q: &Matrix<T>, k: &Matrix<T>, v: &Matrix<T>) -> Result<Matrix<T>, ModelError> {
    check_shapes(q, k, v)?;
    Ok(attention_forward(q, k, v, None).out)
}

/// The softmax weights of [`scaled_dot_attention`].
pub fn attention_weights<T: Scalar>(q: &Matrix<T>, k: &Matrix<T>, v: &Matrix<T>) -> Result<Matrix<T>, ModelError> {
    check_shapes(q, k, v)?;
    Ok(attention_forward(q, k, v, None).weights)
}

/// Ism frames query Fil frames and read Harf values. An optional chirps bias is
/// added to every pre-softmax score.
pub fn component_attention<T: Scalar>(
    ism_feats: &Matrix<T>,
    fil_feats: &Matrix<T>,
    harf_feats: &Matrix<T>,
    chirps_bias: Option<T>,
) -> Result<Matrix<T>, ModelError> {
    check_shapes(ism_feats, fil_feats, harf_feats)?;
    Ok(attention_forward(ism_feats, fil_feats, harf_feats, chirps_bias).out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_dim_rejected() {
        assert!(matches!(positional_encoding::<f64>(4, 5), Err(ModelError::OddDim(5))));
    }

    #[test]
    fn single_key_returns_its_value() {
        let q = Matrix::from_rows(&[[0.3, -1.0], [2.0, 0.5]]);
        let k = Matrix::from_rows(&[[1.0, 1.0]]);
        let v = Matrix::from_rows(&[[4.0, 5.0, 6.0]]);
        let out = scaled_dot_attention(&q, &k, &v).unwrap();
        for r in out.iter_rows() {
            assert_eq!(r, &[4.0, 5.0, 6.0]);
        }
    }

    #[test]
    fn equal_scores_average_values() {
        let q = Matrix::from_rows(&[[1.0, 0.0]]);
        let k = Matrix::from_rows(&[[0.0, 1.0], [0.0, -1.0]]);
        let v = Matrix::from_rows(&[[2.0, 0.0], [4.0, 2.0]]);
        let out = scaled_dot_attention(&q, &k, &v).unwrap();
        assert_eq!(out.row(0), &[3.0, 1.0]);
    }

    #[test]
    fn shape_mismatch() {
        let q = Matrix::<f64>::zeros(1, 2);
        let k = Matrix::zeros(2, 3);
        let v = Matrix::zeros(2, 1);
        assert!(matches!(scaled_dot_attention(&q, &k, &v), Err(ModelError::ShapeMismatch(_))));
        let v3 = Matrix::zeros(3, 1);
        let k2 = Matrix::zeros(2, 2);
        assert!(matches!(component_attention(&q, &k2, &v3, None), Err(ModelError::ShapeMismatch(_))));
    }
}
