use super::SegmentationError;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparatorConfig<T> {
    pub v_th: T,
    pub v_max: T,
    pub v_min: T,
}

impl<T: Scalar> ComparatorConfig<T> {
    pub fn mid(&self) -> T {
        (self.v_max + self.v_min) / T::of(2.0)
    }
}

/// Three-level square wave over `{v_min, (v_min + v_max)/2, v_max}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryWave<T> {
    pub values: Vec<T>,
    pub rate: u32,
}

fn sign<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Sample-wise comparator: `(v_max − v_min)/2 · sign(v_in − v_th) + (v_max + v_min)/2`,
/// with `sign(0) = 0` so samples sitting exactly on the threshold map to the midpoint.
pub fn comparator<T: Scalar>(
    signal: &[T],
    rate: u32,
    cfg: &ComparatorConfig<T>,
) -> Result<BinaryWave<T>, SegmentationError> {
    if !(cfg.v_min < cfg.v_max) {
        return Err(SegmentationError::InvalidLevels);
    }
    if signal.is_empty() {
        return Err(SegmentationError::EmptySignal);
    }
    let half_swing = (cfg.v_max - cfg.v_min) / T::of(2.0);
    let mid = cfg.mid();
    let values = signal
        .iter()
        .map(|&v| match sign(v - cfg.v_th) {
            s if s > T::zero() => cfg.v_max,
            s if s < T::zero() => cfg.v_min,
            s => half_swing * s + mid,
        })
        .collect();
    Ok(BinaryWave { values, rate })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: ComparatorConfig<f64> = ComparatorConfig { v_th: 0.2, v_max: 1.0, v_min: -1.0 };

    #[test]
    fn above_threshold_is_high() {
        let w = comparator(&[1.2; 8], 8000, &CFG).unwrap();
        assert!(w.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn on_threshold_is_mid() {
        let w = comparator(&[0.2; 4], 8000, &CFG).unwrap();
        assert!(w.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn errors() {
        let bad = ComparatorConfig { v_th: 0.0, v_max: 0.0, v_min: 0.0 };
        assert!(matches!(comparator(&[1.0], 8000, &bad), Err(SegmentationError::InvalidLevels)));
        assert!(matches!(comparator::<f64>(&[], 8000, &CFG), Err(SegmentationError::EmptySignal)));
    }
}
