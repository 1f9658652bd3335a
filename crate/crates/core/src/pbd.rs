//! Exact Poisson-binomial count distributions over per-step event
//! probabilities: forward recursion with right-truncation, negative
//! log-likelihood and its reverse-mode gradient, a subset-enumeration
//! oracle for testing, and diagnostic bounds on the distribution maximum.
//!
//! The count of a sequence of independent non-identical Bernoulli trials
//! follows a Poisson-binomial distribution. Everything here runs in plain
//! probability space: all intermediates stay in [0, 1], so the recursion
//! cannot overflow, and underflow is handled by a mass floor at the loss.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor applied to a bin mass inside the log of [`nll`]. Keeps the loss
/// finite when the label bin carries no mass early in training.
pub const EPS_MASS: f64 = 1e-12;

/// Largest sequence length the subset-enumeration oracles accept.
pub const BRUTE_FORCE_MAX_LEN: usize = 20;

/// Per-time-step event probabilities for one channel of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbSequence<S> {
    probs: Vec<S>,
}

impl<S: Scalar> ProbSequence<S> {
    /// Validates that the sequence is nonempty and every value is a finite
    /// probability in [0, 1].
    pub fn new(probs: Vec<S>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid_input("probability sequence is empty"));
        }
        for (t, &p) in probs.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::invalid_input(format!(
                    "non-finite probability at step {t}"
                )));
            }
            if p < S::zero() || p > S::one() {
                return Err(Error::invalid_input(format!(
                    "probability {p} at step {t} outside [0, 1]"
                )));
            }
        }
        Ok(ProbSequence { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.probs
    }

    /// Sum of the per-step probabilities, i.e. the expected event count.
    pub fn expected_count(&self) -> S {
        self.probs.iter().copied().sum()
    }
}

/// PMF of the event count over bins {0, …, k_max}. When `truncated_tail`
/// is set the last bin aggregates all counts ≥ k_max.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution<S> {
    masses: Vec<S>,
    k_max: usize,
    truncated_tail: bool,
}

impl<S: Scalar> CountDistribution<S> {
    pub fn masses(&self) -> &[S] {
        &self.masses
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn truncated_tail(&self) -> bool {
        self.truncated_tail
    }

    pub fn mass(&self, k: usize) -> S {
        self.masses.get(k).copied().unwrap_or_else(S::zero)
    }

    /// Bin with the largest mass; ties resolve to the smallest count.
    pub fn modal_count(&self) -> usize {
        let mut best = 0;
        for (k, &m) in self.masses.iter().enumerate() {
            if m > self.masses[best] {
                best = k;
            }
        }
        best
    }

    pub fn mean(&self) -> S {
        self.masses
            .iter()
            .enumerate()
            .map(|(k, &m)| S::from_usize(k).unwrap() * m)
            .sum()
    }

    pub fn variance(&self) -> S {
        let mu = self.mean();
        self.masses
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let d = S::from_usize(k).unwrap() - mu;
                d * d * m
            })
            .sum()
    }

    /// |Σ masses − 1|, used by the invariant suites.
    pub fn normalization_error(&self) -> S {
        let total: S = self.masses.iter().copied().sum();
        (total - S::one()).abs()
    }
}

/// Diagnostic quantities bounding how concentrated the count
/// distribution can stay as the sequence is consumed.
#[derive(Debug, Clone)]
pub struct DiagnosticsReport<S> {
    /// max_k Pr(count(1..t) = k) for each prefix length t = 1..T.
    pub running_max: Vec<S>,
    /// ½ + min_j |½ − p(j)|: a single near-half probability caps the
    /// maximum bin permanently.
    pub first_upper_bound: S,
    /// Poisson-approximation bound on the maximum bin, minimized over
    /// ascending-sorted prefixes.
    pub lecam_bound: S,
    /// Cumulative variance Σ_{j≤t} p(j)(1 − p(j)) for t = 1..T.
    pub variance_series: Vec<S>,
}

fn effective_bins(k_max: usize, len: usize) -> Result<(usize, bool)> {
    if k_max == 0 {
        return Err(Error::invalid_input("k_max must be at least 1"));
    }
    // k_max beyond the sequence length carries no extra information.
    let k_eff = k_max.min(len);
    Ok((k_eff, k_eff < len))
}

/// One step of the count recursion, in place over `bins[0..=k_cap]`.
///
/// `bins[k_cap]` follows the truncated-tail rule (mass that reaches the
/// cap never leaves); for k_cap equal to the full length this coincides
/// with the plain recursion because the top bin is empty until the last
/// step.
fn advance_bins<S: Scalar>(bins: &mut [S], k_cap: usize, p: S) {
    let q = S::one() - p;
    bins[k_cap] = bins[k_cap] + p * bins[k_cap - 1];
    for k in (1..k_cap).rev() {
        bins[k] = q * bins[k] + p * bins[k - 1];
    }
    bins[0] = q * bins[0];
}

/// Count PMF over {0, …, k_max} by the forward recursion, O(k_max · T).
///
/// `k_max > T` is treated as `k_max = T` (untruncated). Otherwise the
/// last bin absorbs all mass at or above `k_max`.
pub fn pmf<S: Scalar>(p: &ProbSequence<S>, k_max: usize) -> Result<CountDistribution<S>> {
    let (k_eff, truncated) = effective_bins(k_max, p.len())?;
    let mut bins = vec![S::zero(); k_eff + 1];
    bins[0] = S::one();
    for &pt in p.as_slice() {
        advance_bins(&mut bins, k_eff, pt);
    }
    Ok(CountDistribution {
        masses: bins,
        k_max: k_eff,
        truncated_tail: truncated,
    })
}

/// Untruncated count PMFs of every prefix p(1..t), t = 1..T, computed in
/// one incremental pass (O(T²) total).
pub fn prefix_pmfs<S: Scalar>(p: &ProbSequence<S>) -> Result<Vec<CountDistribution<S>>> {
    let t_len = p.len();
    let mut bins = vec![S::zero(); t_len + 1];
    bins[0] = S::one();
    let mut out = Vec::with_capacity(t_len);
    for (t, &pt) in p.as_slice().iter().enumerate() {
        advance_bins(&mut bins, t + 1, pt);
        out.push(CountDistribution {
            masses: bins[..=t + 1].to_vec(),
            k_max: t + 1,
            truncated_tail: false,
        });
    }
    Ok(out)
}

/// Exact untruncated PMF by enumerating all subsets of trial indices.
/// Testing oracle only; refuses sequences longer than
/// [`BRUTE_FORCE_MAX_LEN`].
pub fn pmf_bruteforce<S: Scalar>(p: &ProbSequence<S>) -> Result<CountDistribution<S>> {
    let t_len = p.len();
    if t_len > BRUTE_FORCE_MAX_LEN {
        return Err(Error::SizeLimit(format!(
            "brute-force enumeration limited to T <= {BRUTE_FORCE_MAX_LEN}, got {t_len}"
        )));
    }
    let probs = p.as_slice();
    let mut masses = vec![S::zero(); t_len + 1];
    for mask in 0u32..(1u32 << t_len) {
        let mut prob = S::one();
        for (i, &pi) in probs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                prob = prob * pi;
            } else {
                prob = prob * (S::one() - pi);
            }
        }
        let k = mask.count_ones() as usize;
        masses[k] = masses[k] + prob;
    }
    Ok(CountDistribution {
        masses,
        k_max: t_len,
        truncated_tail: false,
    })
}

/// Negative log-likelihood of observing count `y`, with `y` clipped to
/// the tail bin and the bin mass floored at [`EPS_MASS`].
pub fn nll<S: Scalar>(p: &ProbSequence<S>, y: usize, k_max: usize) -> Result<S> {
    let dist = pmf(p, k_max)?;
    let floor = S::from_f64_lossy(EPS_MASS);
    let mass = dist.mass(y.min(dist.k_max())).max(floor);
    Ok(-mass.ln())
}

/// NLL and its gradient ∂NLL/∂p(t) in one pass; see [`nll_grad`].
pub fn nll_with_grad<S: Scalar>(
    p: &ProbSequence<S>,
    y: usize,
    k_max: usize,
) -> Result<(S, Vec<S>)> {
    let t_len = p.len();
    let (k_eff, _) = effective_bins(k_max, t_len)?;
    let probs = p.as_slice();
    let width = k_eff + 1;

    // Forward table over all prefixes, row t = distribution after t steps.
    let mut table = vec![S::zero(); (t_len + 1) * width];
    table[0] = S::one();
    for t in 0..t_len {
        let (done, rest) = table.split_at_mut((t + 1) * width);
        let prev = &done[t * width..];
        let cur = &mut rest[..width];
        cur.copy_from_slice(prev);
        advance_bins(cur, k_eff, probs[t]);
    }

    let y_idx = y.min(k_eff);
    let mass = table[t_len * width + y_idx];
    let floor = S::from_f64_lossy(EPS_MASS);
    if mass <= floor {
        // Loss is flat at -ln(eps) here, so the exact gradient is zero.
        return Ok((-floor.ln(), vec![S::zero(); t_len]));
    }
    let loss = -mass.ln();

    // Reverse sweep: adjoint of each bin w.r.t. the loss.
    let mut adj = vec![S::zero(); width];
    adj[y_idx] = -S::one() / mass;
    let mut next_adj = vec![S::zero(); width];
    let mut grad = vec![S::zero(); t_len];
    for t in (1..=t_len).rev() {
        let pt = probs[t - 1];
        let q = S::one() - pt;
        let prev = &table[(t - 1) * width..t * width];
        for a in next_adj.iter_mut() {
            *a = S::zero();
        }
        let mut dp = adj[k_eff] * prev[k_eff - 1];
        next_adj[k_eff] = next_adj[k_eff] + adj[k_eff];
        next_adj[k_eff - 1] = next_adj[k_eff - 1] + pt * adj[k_eff];
        for k in 1..k_eff {
            dp = dp + adj[k] * (prev[k - 1] - prev[k]);
            next_adj[k] = next_adj[k] + q * adj[k];
            next_adj[k - 1] = next_adj[k - 1] + pt * adj[k];
        }
        dp = dp - adj[0] * prev[0];
        next_adj[0] = next_adj[0] + q * adj[0];
        grad[t - 1] = dp;
        std::mem::swap(&mut adj, &mut next_adj);
    }
    Ok((loss, grad))
}

/// Gradient of [`nll`] w.r.t. every p(t), computed by a backward sweep
/// over the recursion table in O(k_max · T).
pub fn nll_grad<S: Scalar>(p: &ProbSequence<S>, y: usize, k_max: usize) -> Result<Vec<S>> {
    nll_with_grad(p, y, k_max).map(|(_, g)| g)
}

/// Exact NLL gradient via the leave-one-out identity
/// ∂Pr(Y=y)/∂p(t) = Q₋ₜ(y−1) − Q₋ₜ(y), where Q₋ₜ is the count PMF of the
/// sequence with trial t removed. Testing oracle only (T ≤ 20).
pub fn grad_oracle<S: Scalar>(p: &ProbSequence<S>, y: usize) -> Result<Vec<S>> {
    let full = pmf_bruteforce(p)?;
    let mass = full.mass(y);
    let floor = S::from_f64_lossy(EPS_MASS);
    if mass <= floor {
        return Ok(vec![S::zero(); p.len()]);
    }
    let probs = p.as_slice();
    let mut grad = Vec::with_capacity(p.len());
    for t in 0..p.len() {
        let rest: Vec<S> = probs
            .iter()
            .enumerate()
            .filter_map(|(j, &pj)| (j != t).then_some(pj))
            .collect();
        let (q_below, q_at) = if rest.is_empty() {
            // Single trial: the leave-one-out distribution is a point mass at 0.
            let point = |k: usize| if k == 0 { S::one() } else { S::zero() };
            (if y == 0 { S::zero() } else { point(y - 1) }, point(y))
        } else {
            let q = pmf_bruteforce(&ProbSequence::new(rest)?)?;
            (if y == 0 { S::zero() } else { q.mass(y - 1) }, q.mass(y))
        };
        grad.push(-(q_below - q_at) / mass);
    }
    Ok(grad)
}

/// max_k of the Poisson PMF with rate `lambda`, evaluated at the mode
/// floor(lambda). Log-space factorial keeps large rates stable.
fn poisson_max_pmf<S: Scalar>(lambda: S) -> S {
    if lambda <= S::zero() {
        return S::one();
    }
    let k = lambda.floor();
    let k_int = k.to_usize().unwrap_or(0);
    let mut ln_fact = S::zero();
    for i in 2..=k_int {
        ln_fact = ln_fact + S::from_usize(i).unwrap().ln();
    }
    let ln_pmf = k * lambda.ln() - lambda - ln_fact;
    ln_pmf.exp()
}

/// Diagnostic bounds on the count distribution of every prefix.
pub fn diagnostics<S: Scalar>(p: &ProbSequence<S>) -> Result<DiagnosticsReport<S>> {
    let t_len = p.len();
    let probs = p.as_slice();
    let half = S::from_f64_lossy(0.5);

    // Untruncated prefix recursion, tracking the largest bin per prefix.
    let mut bins = vec![S::zero(); t_len + 1];
    bins[0] = S::one();
    let mut running_max = Vec::with_capacity(t_len);
    for (t, &pt) in probs.iter().enumerate() {
        advance_bins(&mut bins, t + 1, pt);
        let mut mx = bins[0];
        for &b in &bins[1..=t + 1] {
            if b > mx {
                mx = b;
            }
        }
        running_max.push(mx);
    }

    let first_upper_bound = half
        + probs
            .iter()
            .map(|&pj| (half - pj).abs())
            .fold(S::infinity(), S::min);

    // Ascending order is the minimizing permutation family for the
    // Poisson-approximation bound; scan every prefix length.
    let mut sorted = probs.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite probabilities"));
    let two = S::from_f64_lossy(2.0);
    let mut rate = S::zero();
    let mut sq_sum = S::zero();
    let mut lecam_bound = S::infinity();
    for &pj in &sorted {
        rate = rate + pj;
        sq_sum = sq_sum + pj * pj;
        let bound = poisson_max_pmf(rate) + two * sq_sum;
        if bound < lecam_bound {
            lecam_bound = bound;
        }
    }

    let mut variance_series = Vec::with_capacity(t_len);
    let mut acc = S::zero();
    for &pj in probs {
        acc = acc + pj * (S::one() - pj);
        variance_series.push(acc);
    }

    Ok(DiagnosticsReport {
        running_max,
        first_upper_bound,
        lecam_bound,
        variance_series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(p: &[f64]) -> ProbSequence<f64> {
        ProbSequence::new(p.to_vec()).unwrap()
    }

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "got {got:?} want {want:?}");
        }
    }

    #[test]
    fn pmf_all_zero_probs() {
        let d = pmf(&seq(&[0.0, 0.0, 0.0]), 3).unwrap();
        assert_eq!(d.masses(), &[1.0, 0.0, 0.0, 0.0]);
        assert!(!d.truncated_tail());
    }

    #[test]
    fn pmf_matches_hand_expansion() {
        let d = pmf(&seq(&[0.1, 0.2, 0.3]), 3).unwrap();
        assert_close(d.masses(), &[0.504, 0.398, 0.092, 0.006], 1e-15);
    }

    #[test]
    fn pmf_truncates_tail() {
        let d = pmf(&seq(&[0.6, 0.7]), 1).unwrap();
        assert_close(d.masses(), &[0.12, 0.88], 1e-15);
        assert!(d.truncated_tail());
        assert_eq!(d.k_max(), 1);
    }

    #[test]
    fn pmf_kmax_beyond_length_is_untruncated() {
        let p = seq(&[0.25, 0.5, 0.75]);
        let full = pmf(&p, 3).unwrap();
        let over = pmf(&p, 10).unwrap();
        assert_eq!(full.masses(), over.masses());
        assert!(!over.truncated_tail());
    }

    #[test]
    fn pmf_rejects_bad_input() {
        assert!(ProbSequence::<f64>::new(vec![]).is_err());
        assert!(ProbSequence::new(vec![f64::NAN]).is_err());
        assert!(ProbSequence::new(vec![1.5]).is_err());
        assert!(pmf(&seq(&[0.5]), 0).is_err());
    }

    #[test]
    fn bruteforce_fair_coins() {
        let d = pmf_bruteforce(&seq(&[0.5, 0.5])).unwrap();
        assert_close(d.masses(), &[0.25, 0.5, 0.25], 1e-15);
    }

    #[test]
    fn bruteforce_deterministic_event() {
        let d = pmf_bruteforce(&seq(&[1.0])).unwrap();
        assert_eq!(d.masses(), &[0.0, 1.0]);
    }

    #[test]
    fn bruteforce_matches_hand_expansion() {
        let d = pmf_bruteforce(&seq(&[0.1, 0.2, 0.3])).unwrap();
        assert_close(d.masses(), &[0.504, 0.398, 0.092, 0.006], 1e-15);
    }

    #[test]
    fn bruteforce_refuses_long_sequences() {
        let p = seq(&vec![0.5; 21]);
        assert!(matches!(pmf_bruteforce(&p), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn recursion_agrees_with_bruteforce() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for t_len in 1..=12 {
            let probs: Vec<f64> = (0..t_len).map(|_| next()).collect();
            let p = ProbSequence::new(probs).unwrap();
            let fast = pmf(&p, t_len).unwrap();
            let brute = pmf_bruteforce(&p).unwrap();
            assert_close(fast.masses(), brute.masses(), 1e-12);
        }
    }

    #[test]
    fn nll_certain_zero_count() {
        assert_eq!(nll(&seq(&[0.0, 0.0, 0.0]), 0, 3).unwrap(), 0.0);
    }

    #[test]
    fn nll_matches_bruteforce_mass() {
        let got = nll(&seq(&[0.1, 0.2, 0.3]), 1, 3).unwrap();
        assert!((got + 0.398f64.ln()).abs() < 1e-12);
        assert!((got - 0.92130).abs() < 1e-5);
    }

    #[test]
    fn nll_single_fair_trial() {
        let got = nll(&seq(&[0.5]), 1, 1).unwrap();
        assert!((got - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn nll_floors_zero_mass() {
        // Count 3 is impossible with one certain event.
        let got = nll(&seq(&[1.0]), 3, 1).unwrap();
        assert!((got + EPS_MASS.ln()).abs() < 1e-9);
    }

    #[test]
    fn grad_symmetry_fair_coins() {
        let g = nll_grad(&seq(&[0.5, 0.5]), 1, 2).unwrap();
        assert_close(&g, &[0.0, 0.0], 1e-15);
    }

    #[test]
    fn grad_zero_count_closed_form() {
        // For y = 0 the NLL is -Σ log(1 - p(t)), so ∂/∂p(t) = 1/(1 - p(t)).
        let g = nll_grad(&seq(&[0.1, 0.2, 0.3]), 0, 3).unwrap();
        assert_close(&g, &[1.0 / 0.9, 1.0 / 0.8, 1.0 / 0.7], 1e-14);
    }

    #[test]
    fn grad_matches_central_differences() {
        let probs: Vec<f64> = vec![0.13, 0.71, 0.42, 0.05, 0.88, 0.33, 0.56, 0.24];
        let y = 2;
        let g = nll_grad(&ProbSequence::new(probs.clone()).unwrap(), y, 8).unwrap();
        let h = 1e-6;
        for t in 0..probs.len() {
            let mut hi = probs.clone();
            let mut lo = probs.clone();
            hi[t] += h;
            lo[t] -= h;
            let f_hi = nll(&ProbSequence::new(hi).unwrap(), y, 8).unwrap();
            let f_lo = nll(&ProbSequence::new(lo).unwrap(), y, 8).unwrap();
            let fd = (f_hi - f_lo) / (2.0 * h);
            let rel = (g[t] - fd).abs() / g[t].abs().max(fd.abs()).max(1e-8);
            assert!(rel <= 1e-5, "t={t}: analytic {} vs fd {}", g[t], fd);
        }
    }

    #[test]
    fn grad_matches_oracle_with_truncation_below_tail() {
        let p = seq(&[0.3, 0.6, 0.2, 0.45, 0.9]);
        let fast = nll_grad(&p, 1, 3).unwrap();
        let exact = grad_oracle(&p, 1).unwrap();
        assert_close(&fast, &exact, 1e-13);
    }

    #[test]
    fn oracle_single_certain_trial() {
        let g = grad_oracle(&seq(&[1.0]), 1).unwrap();
        assert_close(&g, &[-1.0], 1e-15);
    }

    #[test]
    fn oracle_zero_count_closed_form() {
        let g = grad_oracle(&seq(&[0.1, 0.2, 0.3]), 0).unwrap();
        assert_close(&g, &[1.0 / 0.9, 1.0 / 0.8, 1.0 / 0.7], 1e-14);
    }

    #[test]
    fn diagnostics_running_max_two_steps() {
        let d = diagnostics(&seq(&[0.3, 0.4])).unwrap();
        assert_close(&d.running_max, &[0.7, 0.46], 1e-15);
        assert!(d.running_max[1] <= d.running_max[0]);
    }

    #[test]
    fn diagnostics_half_probability_bound_is_tight() {
        let d = diagnostics(&seq(&[0.5])).unwrap();
        assert_eq!(d.first_upper_bound, 0.5);
        assert_eq!(d.running_max[0], 0.5);
    }

    #[test]
    fn diagnostics_poisson_bound_hundred_small_probs() {
        let d = diagnostics(&seq(&vec![0.01; 100])).unwrap();
        let expected = (-1.0f64).exp() + 0.02;
        assert!((d.lecam_bound - expected).abs() <= 1e-9);
        assert!(d.running_max[99] <= d.lecam_bound + 1e-12);
    }

    #[test]
    fn diagnostics_variance_series_cumulative() {
        let d = diagnostics(&seq(&[0.2, 0.7])).unwrap();
        assert_close(&d.variance_series, &[0.16, 0.16 + 0.21], 1e-15);
    }

    #[test]
    fn modal_count_and_moments() {
        let d = pmf(&seq(&[0.9, 0.9]), 2).unwrap();
        assert_eq!(d.modal_count(), 2);
        assert!((d.mean() - 1.8).abs() < 1e-12);
        assert!((d.variance() - 2.0 * 0.09).abs() < 1e-12);
    }
}
