//! Harf curve synthesis: a parabola hung between the Ism and Fil anchors, with
//! its sag found by bisection so the curve reaches a target length.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum HarfError {
    #[error("anchors must satisfy t1 < t2")]
    DegenerateSpan,
    #[error("target length {target} is shorter than the chord {chord}")]
    InfeasibleLength { target: f64, chord: f64 },
    #[error("sag search did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("need at least 2 samples, got {0}")]
    BadSampleCount(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor<T> {
    pub t: T,
    pub h: T,
}

impl<T> Anchor<T> {
    pub fn new(t: T, h: T) -> Self {
        Self { t, h }
    }
}

/// `y(t) = a·t² + b·t + c` on `[t1, t2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Parabola<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub t1: T,
    pub t2: T,
}

impl<T: Scalar> Parabola<T> {
    #[inline]
    pub fn eval(&self, t: T) -> T {
        (self.a * t + self.b) * t + self.c
    }

    #[inline]
    pub fn slope(&self, t: T) -> T {
        T::of(2.0) * self.a * t + self.b
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SagFitResult<T> {
    pub sag: T,
    pub iterations: usize,
    pub residual: T,
}

pub fn chord_length<T: Scalar>(p1: Anchor<T>, p2: Anchor<T>) -> T {
    (p2.t - p1.t).hypot(p2.h - p1.h)
}

/// The quadratic through both anchors whose midpoint hangs `sag` below the chord midpoint.
pub fn parabola_through<T: Scalar>(p1: Anchor<T>, p2: Anchor<T>, sag: T) -> Result<Parabola<T>, HarfError> {
    if !(p1.t < p2.t) {
        return Err(HarfError::DegenerateSpan);
    }
    let w = p2.t - p1.t;
    let m = (p2.h - p1.h) / w;
    // y = h1 + m(t − t1) − 4·sag·(t − t1)(t2 − t)/w²
    let k = T::of(4.0) * sag / (w * w);
    let a = k;
    let b = m - k * (p1.t + p2.t);
    let c = p1.h - m * p1.t + k * p1.t * p2.t;
    Ok(Parabola { a, b, c, t1: p1.t, t2: p2.t })
}

fn simpson<T: Scalar>(a: T, fa: T, b: T, fb: T, fm: T) -> T {
    (b - a) / T::of(6.0) * (fa + T::of(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<T: Scalar>(f: &impl Fn(T) -> T, a: T, fa: T, b: T, fb: T, m: T, fm: T, whole: T, tol: T, depth: u32) -> T {
    let two = T::of(2.0);
    let lm = (a + m) / two;
    let rm = (m + b) / two;
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::of(15.0) * tol {
        return left + right + delta / T::of(15.0);
    }
    adaptive(f, a, fa, m, fm, lm, flm, left, tol / two, depth - 1)
        + adaptive(f, m, fm, b, fb, rm, frm, right, tol / two, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> T {
    let m = (a + b) / T::of(2.0);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = simpson(a, fa, b, fb, fm);
    adaptive(&f, a, fa, b, fb, m, fm, whole, tol, 48)
}

pub const ARC_TOLERANCE: f64 = 1e-12;

/// Curve length `∫√(1 + y′²) dt` over the span.
pub fn arc_length<T: Scalar>(p: &Parabola<T>) -> T {
    if p.a == T::zero() {
        // straight line: exact
        return (p.t2 - p.t1) * (T::one() + p.b * p.b).sqrt();
    }
    integrate(|t| (T::one() + p.slope(t).powi(2)).sqrt(), p.t1, p.t2, T::of(ARC_TOLERANCE))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SagFitOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for SagFitOptions<T> {
    fn default() -> Self {
        Self { tol: T::of(1e-9), max_iter: 200 }
    }
}

/// Finds the nonnegative sag whose parabola has length `target_len`.
///
/// The upper bracket doubles from the span width until it overshoots the target,
/// then the bracket is bisected. Both phases count toward `max_iter`.
pub fn fit_sag<T: Scalar>(
    p1: Anchor<T>,
    p2: Anchor<T>,
    target_len: T,
    opts: &SagFitOptions<T>,
) -> Result<SagFitResult<T>, HarfError> {
    let chord = chord_length(p1, p2);
    let length_at = |sag: T| parabola_through(p1, p2, sag).map(|p| arc_length(&p));
    if target_len < chord - T::of(1e-12) {
        return Err(HarfError::InfeasibleLength { target: target_len.as_f64(), chord: chord.as_f64() });
    }
    let base = length_at(T::zero())?;
    if (base - target_len).abs() <= opts.tol {
        return Ok(SagFitResult { sag: T::zero(), iterations: 0, residual: (base - target_len).abs() });
    }

    let mut iterations = 0;
    let mut lo = T::zero();
    let mut hi = p2.t - p1.t;
    loop {
        let len = length_at(hi)?;
        if len >= target_len {
            break;
        }
        lo = hi;
        hi = hi * T::of(2.0);
        iterations += 1;
        if iterations >= opts.max_iter {
            return Err(HarfError::NoConvergence(opts.max_iter));
        }
    }
    while iterations < opts.max_iter {
        iterations += 1;
        let mid = (lo + hi) / T::of(2.0);
        if !(lo < mid && mid < hi) {
            break;
        }
        let len = length_at(mid)?;
        let residual = (len - target_len).abs();
        if residual <= opts.tol {
            return Ok(SagFitResult { sag: mid, iterations, residual });
        }
        if len < target_len {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(HarfError::NoConvergence(opts.max_iter))
}

/// `n` equally spaced samples over the span, endpoints included.
pub fn render_harf<T: Scalar>(p: &Parabola<T>, n: usize) -> Result<Vec<(T, T)>, HarfError> {
    if n < 2 {
        return Err(HarfError::BadSampleCount(n));
    }
    let w = p.t2 - p.t1;
    Ok((0..n)
        .map(|i| {
            let t = if i == n - 1 { p.t2 } else { p.t1 + w * T::count(i) / T::count(n - 1) };
            (t, p.eval(t))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(t: f64, h: f64) -> Anchor<f64> {
        Anchor::new(t, h)
    }

    #[test]
    fn straight_chord() {
        let p = parabola_through(a(0.0, 0.0), a(1.0, 0.0), 0.0).unwrap();
        assert_eq!((p.a, p.b, p.c), (0.0, 0.0, 0.0));
        let p = parabola_through(a(0.0, 1.0), a(2.0, 1.0), 0.0).unwrap();
        assert_eq!((p.a, p.b, p.c), (0.0, 0.0, 1.0));
    }

    #[test]
    fn quarter_sag_unit_span() {
        let p = parabola_through(a(0.0, 0.0), a(1.0, 0.0), 0.25).unwrap();
        assert_eq!((p.a, p.b, p.c), (1.0, -1.0, 0.0));
    }

    #[test]
    fn degenerate_span() {
        assert_eq!(parabola_through(a(1.0, 0.0), a(1.0, 2.0), 0.1), Err(HarfError::DegenerateSpan));
    }

    #[test]
    fn line_lengths() {
        let p = parabola_through(a(0.0, 0.0), a(1.0, 0.0), 0.0).unwrap();
        assert_eq!(arc_length(&p), 1.0);
        let p = parabola_through(a(0.0, 0.0), a(3.0, 4.0), 0.0).unwrap();
        assert!((arc_length(&p) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn fit_errors_and_trivial_target() {
        let (p1, p2) = (a(0.0, 0.0), a(1.0, 0.0));
        assert!(matches!(fit_sag(p1, p2, 0.5, &SagFitOptions::default()), Err(HarfError::InfeasibleLength { .. })));
        let r = fit_sag(p1, p2, 1.0, &SagFitOptions::default()).unwrap();
        assert_eq!(r.sag, 0.0);
        assert!(r.residual <= 1e-9);
        let starved = SagFitOptions { tol: 1e-9, max_iter: 3 };
        assert_eq!(fit_sag(p1, p2, 1.1, &starved), Err(HarfError::NoConvergence(3)));
    }

    #[test]
    fn render_endpoints_and_vertex() {
        let p = parabola_through(a(0.0, 0.0), a(1.0, 0.0), 0.25).unwrap();
        assert_eq!(render_harf(&p, 2).unwrap(), vec![(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(render_harf(&p, 3).unwrap()[1], (0.5, -0.25));
        assert_eq!(render_harf(&p, 1), Err(HarfError::BadSampleCount(1)));
    }
}
