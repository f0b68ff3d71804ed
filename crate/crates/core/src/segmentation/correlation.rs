use super::SegmentationError;
use crate::scalar::Scalar;

/// Contextual label attached to a height ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationReport<T> {
    pub n_positive: usize,
    pub n_negative: usize,
    pub mean_positive: T,
    pub mean_negative: T,
    /// Ratios `>= threshold` are predicted positive.
    pub threshold: T,
    pub balanced_accuracy: T,
    pub auc: T,
}

struct Group {
    pos: u64,
    neg: u64,
}

/// Groups of tied ratios, ascending, together with their distinct values.
fn tie_groups<T: Scalar>(pairs: &[(T, Polarity)]) -> Vec<(T, Group)> {
    let mut sorted: Vec<(T, Polarity)> = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("ratios must not be NaN"));
    let mut groups: Vec<(T, Group)> = Vec::new();
    for (r, label) in sorted {
        if groups.last().is_none_or(|g| g.0 != r) {
            groups.push((r, Group { pos: 0, neg: 0 }));
        }
        let g = &mut groups.last_mut().unwrap().1;
        match label {
            Polarity::Positive => g.pos += 1,
            Polarity::Negative => g.neg += 1,
        }
    }
    groups
}

/// Probability that a positive ratio exceeds a negative one, ties counting ½.
/// `None` when either class is absent.
pub fn auc<T: Scalar>(pairs: &[(T, Polarity)]) -> Option<T> {
    let groups = tie_groups(pairs);
    let (np, nn) = groups.iter().fold((0u64, 0u64), |(p, n), (_, g)| (p + g.pos, n + g.neg));
    if np == 0 || nn == 0 {
        return None;
    }
    // twice the Mann–Whitney U, kept integral
    let mut u2 = 0u64;
    let mut neg_below = 0u64;
    for (_, g) in &groups {
        u2 += g.pos * (2 * neg_below + g.neg);
        neg_below += g.neg;
    }
    let total = 2 * np * nn;
    let frac = |num: u64| T::from_u64(num).unwrap() / T::from_u64(total).unwrap();
    // evaluating the smaller side keeps auc(labels) + auc(flipped) == 1 exactly
    Some(if 2 * u2 <= total { frac(u2) } else { T::one() - frac(total - u2) })
}

/// Per-class means, the balanced-accuracy-optimal split and AUC.
pub fn correlate_height_reactions<T: Scalar>(
    pairs: &[(T, Polarity)],
) -> Result<CorrelationReport<T>, SegmentationError> {
    let np = pairs.iter().filter(|p| p.1 == Polarity::Positive).count();
    let nn = pairs.len() - np;
    if np == 0 {
        return Err(SegmentationError::MissingClass(Polarity::Positive));
    }
    if nn == 0 {
        return Err(SegmentationError::MissingClass(Polarity::Negative));
    }
    let mean_of = |pol: Polarity, n: usize| {
        pairs.iter().filter(|p| p.1 == pol).fold(T::zero(), |a, p| a + p.0) / T::count(n)
    };

    let groups = tie_groups(pairs);
    let (np64, nn64) = (np as u64, nn as u64);
    let (mut pos_below, mut neg_below) = (0u64, 0u64);
    // balanced accuracy scaled by 2·np·nn, compared exactly; ascending scan keeps the lower threshold on ties
    let mut best: Option<(u64, T)> = None;
    for (r, g) in &groups {
        let tp = np64 - pos_below;
        let tn = neg_below;
        let score = tp * nn64 + tn * np64;
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, *r));
        }
        pos_below += g.pos;
        neg_below += g.neg;
    }
    let (score, threshold) = best.expect("nonempty");
    let balanced_accuracy = T::from_u64(score).unwrap() / T::from_u64(2 * np64 * nn64).unwrap();

    Ok(CorrelationReport {
        n_positive: np,
        n_negative: nn,
        mean_positive: mean_of(Polarity::Positive, np),
        mean_negative: mean_of(Polarity::Negative, nn),
        threshold,
        balanced_accuracy,
        auc: auc(pairs).expect("both classes present"),
    })
}
