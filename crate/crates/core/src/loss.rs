//! Batch count loss over multi-channel samples, probability clamping,
//! and the head-bias initialization that places a chosen mass on the
//! zero-count bin.
//!
//! Channels are independent: each channel of each sample contributes the
//! negative log-likelihood of its observed count, channels are summed and
//! samples averaged, so the learning-rate choice is independent of batch
//! size. Samples may have different lengths; no padding is ever involved.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::pbd::{self, ProbSequence};
use crate::scalar::Scalar;

/// Default clamp margin keeping probabilities away from {0, 1}.
pub const DEFAULT_EPS_P: f64 = 1e-6;

/// Observed per-channel event counts for one sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountLabel {
    counts: Vec<usize>,
}

impl CountLabel {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::invalid_input("count label needs at least one channel"));
        }
        Ok(CountLabel { counts })
    }

    pub fn channels(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, channel: usize) -> usize {
        self.counts[channel]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

/// Loss decomposition over a batch.
#[derive(Debug, Clone)]
pub struct LossReport<S> {
    /// Mean over samples of the per-sample (channel-summed) NLL.
    pub total: S,
    /// Channel-summed NLL per sample.
    pub per_sample: Vec<S>,
    /// Per-channel NLL averaged over samples; sums to `total`.
    pub per_channel: Vec<S>,
}

fn validate_batch<S: Scalar>(p_batch: &[Mat<S>], labels: &[CountLabel]) -> Result<usize> {
    if p_batch.is_empty() {
        return Err(Error::invalid_input("empty batch"));
    }
    if p_batch.len() != labels.len() {
        return Err(Error::invalid_input(format!(
            "{} probability matrices vs {} labels",
            p_batch.len(),
            labels.len()
        )));
    }
    let channels = p_batch[0].cols();
    for (i, (p, label)) in p_batch.iter().zip(labels).enumerate() {
        if p.cols() != channels || label.channels() != channels {
            return Err(Error::invalid_input(format!(
                "sample {i}: expected {channels} channels, got matrix with {} and label with {}",
                p.cols(),
                label.channels()
            )));
        }
        if p.rows() == 0 {
            return Err(Error::invalid_input(format!("sample {i} has zero length")));
        }
    }
    Ok(channels)
}

/// Mean count NLL over a batch of T×C probability matrices.
pub fn batch_nll<S: Scalar>(
    p_batch: &[Mat<S>],
    labels: &[CountLabel],
    k_max: usize,
) -> Result<LossReport<S>> {
    batch_nll_impl(p_batch, labels, k_max, false).map(|(report, _)| report)
}

/// Like [`batch_nll`], also returning ∂total/∂p as one T×C matrix per
/// sample (the 1/N batch-mean factor is already applied).
pub fn batch_nll_with_grad<S: Scalar>(
    p_batch: &[Mat<S>],
    labels: &[CountLabel],
    k_max: usize,
) -> Result<(LossReport<S>, Vec<Mat<S>>)> {
    batch_nll_impl(p_batch, labels, k_max, true)
        .map(|(report, grads)| (report, grads.expect("gradients requested")))
}

fn batch_nll_impl<S: Scalar>(
    p_batch: &[Mat<S>],
    labels: &[CountLabel],
    k_max: usize,
    with_grad: bool,
) -> Result<(LossReport<S>, Option<Vec<Mat<S>>>)> {
    let channels = validate_batch(p_batch, labels)?;
    let n = p_batch.len();
    let inv_n = S::one() / S::from_usize(n).unwrap();

    let mut per_sample = Vec::with_capacity(n);
    let mut per_channel = vec![S::zero(); channels];
    let mut grads = with_grad.then(Vec::new);

    for (p, label) in p_batch.iter().zip(labels) {
        let mut sample_loss = S::zero();
        let mut grad = with_grad.then(|| Mat::zeros(p.rows(), channels));
        for c in 0..channels {
            let probs = ProbSequence::new(p.column(c))?;
            let y = label.count(c);
            let channel_loss = if let Some(g) = grad.as_mut() {
                let (loss, dp) = pbd::nll_with_grad(&probs, y, k_max)?;
                for (t, &d) in dp.iter().enumerate() {
                    g.set(t, c, d * inv_n);
                }
                loss
            } else {
                pbd::nll(&probs, y, k_max)?
            };
            sample_loss = sample_loss + channel_loss;
            per_channel[c] = per_channel[c] + channel_loss;
        }
        per_sample.push(sample_loss);
        if let (Some(gs), Some(g)) = (grads.as_mut(), grad) {
            gs.push(g);
        }
    }

    for c in per_channel.iter_mut() {
        *c = *c * inv_n;
    }
    let total = per_sample.iter().copied().sum::<S>() * inv_n;
    Ok((
        LossReport {
            total,
            per_sample,
            per_channel,
        },
        grads,
    ))
}

/// Pre-sigmoid bias that puts exactly `omega` mass on the zero-count bin
/// of a length-`t_len` sequence when every other output is zero:
/// log((1 − ω^{1/T}) / ω^{1/T}).
pub fn init_bias<S: Scalar>(omega: S, t_len: usize) -> Result<S> {
    if !(omega > S::zero() && omega < S::one()) {
        return Err(Error::invalid_input(format!(
            "omega {omega} outside (0, 1)"
        )));
    }
    if t_len == 0 {
        return Err(Error::invalid_input("sequence length must be at least 1"));
    }
    let root = omega.powf(S::one() / S::from_usize(t_len).unwrap());
    Ok(((S::one() - root) / root).ln())
}

/// Elementwise clamp to [eps_p, 1 − eps_p]. `eps_p = 0` is a no-op.
pub fn clamp_probs<S: Scalar>(raw: &ProbSequence<S>, eps_p: S) -> ProbSequence<S> {
    clamp_probs_with_mask(raw, eps_p).0
}

/// Clamp plus a mask of which entries were moved; gradients through
/// clamped entries must be zeroed by the caller.
pub fn clamp_probs_with_mask<S: Scalar>(
    raw: &ProbSequence<S>,
    eps_p: S,
) -> (ProbSequence<S>, Vec<bool>) {
    assert!(
        eps_p >= S::zero() && eps_p < S::from_f64_lossy(0.1),
        "eps_p must lie in [0, 0.1)"
    );
    let hi = S::one() - eps_p;
    let mut clamped = Vec::with_capacity(raw.len());
    let mut mask = Vec::with_capacity(raw.len());
    for &p in raw.as_slice() {
        if p < eps_p {
            clamped.push(eps_p);
            mask.push(true);
        } else if p > hi {
            clamped.push(hi);
            mask.push(true);
        } else {
            clamped.push(p);
            mask.push(false);
        }
    }
    (
        ProbSequence::new(clamped).expect("clamped values stay in [0, 1]"),
        mask,
    )
}
