//! Decoding event timestamps from probability sequences and scoring them
//! against hidden ground truth with tolerance-window matching.

use crate::error::{Error, Result};
use crate::pbd::{self, ProbSequence};
use crate::scalar::Scalar;

/// Events decoded from one channel's probability sequence.
#[derive(Debug, Clone)]
pub struct DecodedEvents<S> {
    /// Strictly increasing time indices, pairwise separated by at least
    /// the decode `min_separation`.
    pub times: Vec<usize>,
    /// Σₜ p(t).
    pub expected_count: S,
    /// Argmax bin of the untruncated count PMF.
    pub modal_count: usize,
}

/// Peak-picking with non-maximum suppression: keep local maxima above
/// `threshold`, dropping any candidate within `min_separation` of an
/// already-selected larger one (ties go to the earlier index).
pub fn decode<S: Scalar>(
    p: &ProbSequence<S>,
    threshold: S,
    min_separation: usize,
) -> DecodedEvents<S> {
    let probs = p.as_slice();
    let n = probs.len();
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&t| {
            probs[t] > threshold
                && (t == 0 || probs[t] >= probs[t - 1])
                && (t + 1 == n || probs[t] >= probs[t + 1])
        })
        .collect();
    // Larger peaks claim their neighborhood first; earlier index wins ties.
    candidates.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .expect("finite probabilities")
            .then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = Vec::new();
    for t in candidates {
        if selected
            .iter()
            .all(|&s| s.abs_diff(t) >= min_separation.max(1))
        {
            selected.push(t);
        }
    }
    selected.sort_unstable();

    let modal_count = pbd::pmf(p, n)
        .expect("valid probability sequence")
        .modal_count();
    DecodedEvents {
        times: selected,
        expected_count: p.expected_count(),
        modal_count,
    }
}

/// Outcome of matching predicted against true event times.
#[derive(Debug, Clone, Default)]
pub struct MatchResult {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// predicted − true offsets of matched pairs.
    pub signed_errors: Vec<i64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Greedy matching in order of increasing |offset|; each prediction and
/// each truth is used at most once. Inputs must be sorted ascending.
pub fn match_events(pred: &[usize], truth: &[usize], tolerance: usize) -> MatchResult {
    debug_assert!(pred.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(truth.windows(2).all(|w| w[0] <= w[1]));

    // Candidate pairs within tolerance, keyed so the order is symmetric
    // under swapping prediction and truth roles.
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (i, &pt) in pred.iter().enumerate() {
        for (j, &tt) in truth.iter().enumerate() {
            let off = pt.abs_diff(tt);
            if off <= tolerance {
                pairs.push((i, j, off));
            }
        }
    }
    pairs.sort_by_key(|&(i, j, off)| (off, pred[i].min(truth[j]), pred[i].max(truth[j]), pred[i]));

    let mut pred_used = vec![false; pred.len()];
    let mut truth_used = vec![false; truth.len()];
    let mut signed_errors = Vec::new();
    for (i, j, _) in pairs {
        if !pred_used[i] && !truth_used[j] {
            pred_used[i] = true;
            truth_used[j] = true;
            signed_errors.push(pred[i] as i64 - truth[j] as i64);
        }
    }

    let tp = signed_errors.len();
    let fp = pred.len() - tp;
    let fnn = truth.len() - tp;
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fnn);
    MatchResult {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fnn,
        signed_errors,
        precision,
        recall,
        f1: f1_score(precision, recall),
    }
}

/// How per-sample results are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// Pool tp/fp/fn counts, then compute the ratios.
    Micro,
    /// Mean of the per-result precision/recall/F1 scores.
    Macro,
}

/// Pooled scores plus localization-error statistics.
#[derive(Debug, Clone)]
pub struct Summary {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub matched: usize,
    /// Mean of all signed offsets; a systematic late bias shows up here.
    pub mean_signed_error: f64,
    pub std_signed_error: f64,
}

pub fn aggregate(results: &[MatchResult], averaging: Averaging) -> Result<Summary> {
    if results.is_empty() {
        return Err(Error::invalid_input("nothing to aggregate"));
    }
    let tp: usize = results.iter().map(|r| r.true_positives).sum();
    let fp: usize = results.iter().map(|r| r.false_positives).sum();
    let fnn: usize = results.iter().map(|r| r.false_negatives).sum();
    let (precision, recall, f1) = match averaging {
        Averaging::Micro => {
            let p = ratio(tp, tp + fp);
            let r = ratio(tp, tp + fnn);
            (p, r, f1_score(p, r))
        }
        Averaging::Macro => {
            let n = results.len() as f64;
            let p = results.iter().map(|r| r.precision).sum::<f64>() / n;
            let r = results.iter().map(|r| r.recall).sum::<f64>() / n;
            let f = results.iter().map(|r| r.f1).sum::<f64>() / n;
            (p, r, f)
        }
    };

    let errors: Vec<f64> = results
        .iter()
        .flat_map(|r| r.signed_errors.iter().map(|&e| e as f64))
        .collect();
    let (mean, std) = if errors.is_empty() {
        (0.0, 0.0)
    } else {
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / errors.len() as f64;
        (mean, var.sqrt())
    };

    Ok(Summary {
        precision,
        recall,
        f1,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fnn,
        matched: errors.len(),
        mean_signed_error: mean,
        std_signed_error: std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(p: &[f64]) -> ProbSequence<f64> {
        ProbSequence::new(p.to_vec()).unwrap()
    }

    #[test]
    fn decode_two_clear_peaks() {
        let d = decode(&seq(&[0.0, 0.0, 0.9, 0.0, 0.0, 0.8, 0.0]), 0.5, 2);
        assert_eq!(d.times, vec![2, 5]);
    }

    #[test]
    fn decode_all_zero() {
        let d = decode(&seq(&[0.0, 0.0, 0.0]), 0.5, 2);
        assert!(d.times.is_empty());
        assert_eq!(d.expected_count, 0.0);
        assert_eq!(d.modal_count, 0);
    }

    #[test]
    fn decode_suppresses_nearby_smaller_peak() {
        let d = decode(&seq(&[0.9, 0.85, 0.0, 0.0, 0.0]), 0.5, 2);
        assert_eq!(d.times, vec![0]);
    }

    #[test]
    fn decode_tie_goes_to_earlier_index() {
        let d = decode(&seq(&[0.0, 0.9, 0.9, 0.0]), 0.5, 2);
        assert_eq!(d.times, vec![1]);
    }

    #[test]
    fn decode_respects_separation_invariant() {
        let d = decode(&seq(&[0.8, 0.1, 0.9, 0.1, 0.85, 0.1, 0.7]), 0.5, 3);
        for w in d.times.windows(2) {
            assert!(w[1] - w[0] >= 3);
        }
        assert!(d.times.contains(&2));
    }

    #[test]
    fn match_partial_overlap() {
        let m = match_events(&[10, 50], &[12, 300], 5);
        assert_eq!(
            (m.true_positives, m.false_positives, m.false_negatives),
            (1, 1, 1)
        );
        assert_eq!(m.signed_errors, vec![-2]);
        assert_eq!(m.f1, 0.5);
    }

    #[test]
    fn match_identical_lists() {
        let m = match_events(&[3, 9, 20], &[3, 9, 20], 2);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.f1, 1.0);
        assert!(m.signed_errors.iter().all(|&e| e == 0));
    }

    #[test]
    fn match_both_empty_is_perfect() {
        let m = match_events(&[], &[], 5);
        assert_eq!(m.f1, 1.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
    }

    #[test]
    fn match_prefers_nearest_pairing() {
        // 7 should pair with 8 (offset 1), pushing 10 to 12.
        let m = match_events(&[7, 10], &[8, 12], 3);
        assert_eq!(m.true_positives, 2);
        assert_eq!(m.signed_errors, vec![-1, -2]);
    }

    #[test]
    fn match_swap_symmetry() {
        let pred = [0, 2, 9, 14];
        let truth = [1, 3, 15];
        let a = match_events(&pred, &truth, 2);
        let b = match_events(&truth, &pred, 2);
        assert_eq!(a.true_positives, b.true_positives);
        assert_eq!(a.false_positives, b.false_negatives);
        assert_eq!(a.false_negatives, b.false_positives);
        let mut neg: Vec<i64> = b.signed_errors.iter().map(|e| -e).collect();
        let mut orig = a.signed_errors.clone();
        neg.sort_unstable();
        orig.sort_unstable();
        assert_eq!(orig, neg);
    }

    #[test]
    fn zero_tolerance_counts_exact_hits_only() {
        let m = match_events(&[5, 8], &[5, 9], 0);
        assert_eq!(m.true_positives, 1);
        assert_eq!(m.false_positives, 1);
        assert_eq!(m.false_negatives, 1);
    }

    #[test]
    fn aggregate_single_result_is_identity() {
        let m = match_events(&[10, 50], &[12, 300], 5);
        let s = aggregate(std::slice::from_ref(&m), Averaging::Micro).unwrap();
        assert_eq!(s.precision, m.precision);
        assert_eq!(s.recall, m.recall);
        assert_eq!(s.f1, m.f1);
    }

    #[test]
    fn aggregate_pools_counts() {
        let a = match_events(&[5], &[5], 1); // (1, 0, 0)
        let b = match_events(&[40], &[90], 1); // (0, 1, 1)
        let s = aggregate(&[a, b], Averaging::Micro).unwrap();
        assert_eq!(s.precision, 0.5);
        assert_eq!(s.recall, 0.5);
    }

    #[test]
    fn aggregate_macro_averages_scores() {
        let a = match_events(&[5], &[5], 1); // f1 = 1
        let b = match_events(&[40], &[90], 1); // f1 = 0
        let s = aggregate(&[a, b], Averaging::Macro).unwrap();
        assert_eq!(s.f1, 0.5);
    }

    #[test]
    fn aggregate_zero_errors_zero_std() {
        let m = match_events(&[4, 7], &[4, 7], 2);
        let s = aggregate(&[m], Averaging::Micro).unwrap();
        assert_eq!(s.mean_signed_error, 0.0);
        assert_eq!(s.std_signed_error, 0.0);
    }

    #[test]
    fn aggregate_order_invariant_f1() {
        let a = match_events(&[5, 9], &[5], 1);
        let b = match_events(&[40], &[90, 91], 1);
        let c = match_events(&[1], &[1], 1);
        let s1 = aggregate(&[a.clone(), b.clone(), c.clone()], Averaging::Micro).unwrap();
        let s2 = aggregate(&[c, a, b], Averaging::Micro).unwrap();
        assert_eq!(s1.f1, s2.f1);
    }

    #[test]
    fn aggregate_rejects_empty() {
        assert!(aggregate(&[], Averaging::Micro).is_err());
    }
}
