//! Region-similarity metrics over mask sequences: per-frame Jaccard overlap
//! and the mean / recall / decay statistics used by standard video object
//! segmentation protocols.

use thiserror::Error;

use crate::detector::ForegroundMask;

/// A frame counts toward recall when its overlap exceeds this.
const RECALL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("mask dimensions differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        b_width: u32,
        b_height: u32,
    },
    #[error("empty mask sequence")]
    EmptySequence,
}

/// Sequence-level region score.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceScore {
    pub per_frame_iou: Vec<f64>,
    /// Mean per-frame overlap.
    pub j_mean: f64,
    /// Fraction of frames with overlap above 0.5.
    pub j_recall: f64,
    /// First-quartile mean minus last-quartile mean (temporal order):
    /// positive when quality decays over the sequence.
    pub j_decay: f64,
}

/// Jaccard overlap `|pred AND gt| / |pred OR gt|`.
///
/// Two empty masks score 1.0: predicting no foreground where there is none
/// is correct, not undefined.
pub fn iou(pred: &ForegroundMask, gt: &ForegroundMask) -> Result<f64, EvalError> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(EvalError::DimensionMismatch {
            a_width: pred.width(),
            a_height: pred.height(),
            b_width: gt.width(),
            b_height: gt.height(),
        });
    }
    let mut intersection = 0u64;
    let mut union = 0u64;
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        intersection += (p && g) as u64;
        union += (p || g) as u64;
    }
    if union == 0 {
        Ok(1.0)
    } else {
        Ok(intersection as f64 / union as f64)
    }
}

/// Scores an aligned prediction/ground-truth sequence.
pub fn score_sequence(
    preds: &[ForegroundMask],
    gts: &[ForegroundMask],
) -> Result<SequenceScore, EvalError> {
    if preds.is_empty() || gts.is_empty() || preds.len() != gts.len() {
        return Err(EvalError::EmptySequence);
    }
    let per_frame_iou: Vec<f64> = preds
        .iter()
        .zip(gts)
        .map(|(p, g)| iou(p, g))
        .collect::<Result<_, _>>()?;
    Ok(score_from_ious(per_frame_iou))
}

/// Aggregates already-computed per-frame overlaps.
pub fn score_from_ious(per_frame_iou: Vec<f64>) -> SequenceScore {
    let n = per_frame_iou.len();
    let j_mean = per_frame_iou.iter().sum::<f64>() / n as f64;
    let j_recall = per_frame_iou
        .iter()
        .filter(|&&v| v > RECALL_THRESHOLD)
        .count() as f64
        / n as f64;
    let j_decay = decay(&per_frame_iou);
    SequenceScore {
        per_frame_iou,
        j_mean,
        j_recall,
        j_decay,
    }
}

/// Quartile boundaries follow the reference protocol: indices are
/// `rint(linspace(1, N, 5)) - 1` and each bin spans `[b_i, b_{i+1}]`
/// inclusive, which degrades gracefully for short sequences (a single frame
/// decays by exactly 0).
fn decay(ious: &[f64]) -> f64 {
    let n = ious.len();
    let bounds: Vec<usize> = (0..5)
        .map(|i| {
            let pos = 1.0 + i as f64 * (n as f64 - 1.0) / 4.0;
            pos.round_ties_even() as usize - 1
        })
        .collect();
    let bin_mean = |lo: usize, hi: usize| {
        let slice = &ious[lo..=hi];
        slice.iter().sum::<f64>() / slice.len() as f64
    };
    bin_mean(bounds[0], bounds[1]) - bin_mean(bounds[3], bounds[4])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask_from_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> bool,
    ) -> ForegroundMask {
        let mut bits = Vec::with_capacity((width * height) as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        ForegroundMask::new(width, height, bits)
    }

    /// Exhaustive pixel-counting oracle.
    fn iou_brute_force(a: &ForegroundMask, b: &ForegroundMask) -> f64 {
        let mut inter = 0.0;
        let mut union = 0.0;
        for y in 0..a.height() {
            for x in 0..a.width() {
                if a.get(x, y) && b.get(x, y) {
                    inter += 1.0;
                }
                if a.get(x, y) || b.get(x, y) {
                    union += 1.0;
                }
            }
        }
        if union == 0.0 {
            1.0
        } else {
            inter / union
        }
    }

    #[test]
    fn identical_masks_score_one() {
        let m = mask_from_fn(8, 8, |x, y| x > 2 && y < 5);
        assert_eq!(iou(&m, &m).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_masks_score_zero() {
        let a = mask_from_fn(8, 8, |x, _| x < 4);
        let b = mask_from_fn(8, 8, |x, _| x >= 4);
        assert_eq!(iou(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn half_overlap_scores_half() {
        let pred = mask_from_fn(10, 10, |x, _| x < 5);
        let gt = mask_from_fn(10, 10, |_, _| true);
        assert_eq!(iou(&pred, &gt).unwrap(), 0.5);
    }

    #[test]
    fn both_empty_scores_one() {
        let a = ForegroundMask::empty(6, 6);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = ForegroundMask::empty(4, 4);
        let b = ForegroundMask::empty(4, 5);
        assert!(matches!(
            iou(&a, &b),
            Err(EvalError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn perfect_sequence_scores() {
        let m = mask_from_fn(5, 5, |x, y| x == y);
        let preds = vec![m.clone(); 6];
        let score = score_sequence(&preds, &preds).unwrap();
        assert_eq!(score.j_mean, 1.0);
        assert_eq!(score.j_recall, 1.0);
        assert_eq!(score.j_decay, 0.0);
    }

    #[test]
    fn four_frame_worked_example() {
        let full = mask_from_fn(4, 4, |_, _| true);
        let empty = ForegroundMask::empty(4, 4);
        let gts = vec![full.clone(), full.clone(), full.clone(), full.clone()];
        let preds = vec![full.clone(), full.clone(), empty.clone(), empty];
        let score = score_sequence(&preds, &gts).unwrap();
        assert_eq!(score.per_frame_iou, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(score.j_mean, 0.5);
        assert_eq!(score.j_recall, 0.5);
        assert_eq!(score.j_decay, 1.0);
    }

    #[test]
    fn single_frame_decays_zero() {
        let m = mask_from_fn(3, 3, |x, _| x == 1);
        let score = score_sequence(std::slice::from_ref(&m), std::slice::from_ref(&m)).unwrap();
        assert_eq!(score.j_mean, 1.0);
        assert_eq!(score.j_decay, 0.0);
    }

    #[test]
    fn empty_sequence_is_an_error() {
        assert_eq!(score_sequence(&[], &[]), Err(EvalError::EmptySequence));
    }

    #[test]
    fn recall_drops_when_ious_drop() {
        let base = score_from_ious(vec![0.9, 0.8, 0.6, 0.55]);
        let worse = score_from_ious(vec![0.45, 0.4, 0.3, 0.2]);
        assert!(worse.j_recall <= base.j_recall);
        assert_eq!(base.j_recall, 1.0);
        assert_eq!(worse.j_recall, 0.0);
    }

    #[test]
    fn matches_brute_force_on_random_small_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        for _ in 0..1000 {
            let w = rng.random_range(1..=8);
            let h = rng.random_range(1..=8);
            let a = mask_from_fn(w, h, |_, _| rng.random_bool(0.5));
            let b = mask_from_fn(w, h, |_, _| rng.random_bool(0.5));
            assert_eq!(iou(&a, &b).unwrap(), iou_brute_force(&a, &b));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn iou_is_symmetric(bits_a in proptest::collection::vec(any::<bool>(), 36),
                            bits_b in proptest::collection::vec(any::<bool>(), 36)) {
            let a = ForegroundMask::new(6, 6, bits_a);
            let b = ForegroundMask::new(6, 6, bits_b);
            prop_assert_eq!(iou(&a, &b).unwrap(), iou(&b, &a).unwrap());
            prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
        }
    }
}
