//! Randomized invariant suites over the count-distribution engine, the
//! batch loss, and the Hilbert curve. The CLI `props` subcommand runs
//! them with a trial budget and reports worst-case slack per invariant;
//! the acceptance tests reuse the same checks at pinned budgets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval;
use crate::hilbert;
use crate::loss::{self, CountLabel};
use crate::mat::{Image, Mat};
use crate::pbd::{self, CountDistribution, ProbSequence};
use crate::scalar::sigmoid;
use crate::synth::derive_seed;

/// Outcome of one invariant suite.
#[derive(Debug, Clone)]
pub struct PropReport {
    pub name: &'static str,
    pub trials: usize,
    /// Worst observed slack (metric depends on the invariant).
    pub worst_slack: f64,
    /// Slack at or below this passes.
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl PropReport {
    fn new(name: &'static str, trials: usize, worst: f64, tolerance: f64, detail: String) -> Self {
        PropReport {
            name,
            trials,
            worst_slack: worst,
            tolerance,
            passed: worst <= tolerance,
            detail,
        }
    }
}

fn rng_for(name: &str, seed: u64) -> ChaCha8Rng {
    let tag = name.bytes().fold(0u64, |acc, b| acc.wrapping_mul(31).wrapping_add(b as u64));
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, 0))
}

fn random_seq(rng: &mut ChaCha8Rng, t_min: usize, t_max: usize) -> ProbSequence<f64> {
    let t_len = rng.gen_range(t_min..=t_max);
    ProbSequence::new((0..t_len).map(|_| rng.gen::<f64>()).collect()).unwrap()
}

type PmfFn = fn(&ProbSequence<f64>, usize) -> Result<CountDistribution<f64>>;

fn oracle_equivalence_impl(seed: u64, trials: usize, pmf_fn: PmfFn) -> Result<PropReport> {
    let mut rng = rng_for("oracle-equivalence", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 1, 12);
        let fast = pmf_fn(&p, p.len())?;
        let brute = pbd::pmf_bruteforce(&p)?;
        for (a, b) in fast.masses().iter().zip(brute.masses()) {
            let diff = (a - b).abs();
            if diff > worst {
                worst = diff;
                detail = format!("trial {trial} (seed {seed}): bin error {diff:e}");
            }
        }
    }
    Ok(PropReport::new("oracle-equivalence", trials, worst, 1e-12, detail))
}

/// Recursion vs subset enumeration, T ≤ 12.
pub fn check_oracle_equivalence(seed: u64, trials: usize) -> Result<PropReport> {
    oracle_equivalence_impl(seed, trials, pbd::pmf)
}

/// Truncated and untruncated distributions sum to one, and truncated
/// bins below the tail match the untruncated values.
pub fn check_normalization(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("normalization", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 1, 100);
        let k_max = rng.gen_range(1..=p.len() + 3);
        let truncated = pbd::pmf(&p, k_max)?;
        let full = pbd::pmf(&p, p.len())?;
        let mut slack = truncated.normalization_error().max(full.normalization_error());
        for k in 0..truncated.k_max() {
            slack = slack.max((truncated.mass(k) - full.mass(k)).abs());
        }
        if slack > worst {
            worst = slack;
            detail = format!("trial {trial} (seed {seed}): slack {slack:e}");
        }
    }
    Ok(PropReport::new("normalization", trials, worst, 1e-12, detail))
}

/// The largest bin of the prefix distribution never grows with t.
pub fn check_decreasing_maximum(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("decreasing-maximum", seed);
    let mut worst = f64::MIN;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 1, 200);
        let report = pbd::diagnostics(&p)?;
        for w in report.running_max.windows(2) {
            let increase = w[1] - w[0];
            if increase > worst {
                worst = increase;
                detail = format!("trial {trial} (seed {seed}): increase {increase:e}");
            }
        }
    }
    Ok(PropReport::new(
        "decreasing-maximum",
        trials,
        worst.max(0.0),
        1e-12,
        detail,
    ))
}

/// Prefix CDFs are stochastically dominated as t grows:
/// Pr(Y(t) ≤ k) ≤ Pr(Y(t−1) ≤ k).
pub fn check_monotone_count_cdf(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("monotone-count-cdf", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 2, 60);
        let prefixes = pbd::prefix_pmfs(&p)?;
        for w in prefixes.windows(2) {
            let mut cdf_prev = 0.0;
            let mut cdf_cur = 0.0;
            for k in 0..w[0].masses().len() {
                cdf_prev += w[0].mass(k);
                cdf_cur += w[1].mass(k);
                let violation = cdf_cur - cdf_prev;
                if violation > worst {
                    worst = violation;
                    detail = format!("trial {trial} (seed {seed}): CDF rose by {violation:e} at k={k}");
                }
            }
        }
    }
    Ok(PropReport::new("monotone-count-cdf", trials, worst, 1e-12, detail))
}

/// The observed maximum respects both analytic upper bounds.
pub fn check_bound_validity(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("bound-validity", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 1, 200);
        let report = pbd::diagnostics(&p)?;
        let last = *report.running_max.last().unwrap();
        let bound = report.first_upper_bound.min(report.lecam_bound);
        let violation = last - bound;
        if violation > worst {
            worst = violation;
            detail = format!(
                "trial {trial} (seed {seed}): max {last} vs bound {bound}"
            );
        }
    }
    Ok(PropReport::new("bound-validity", trials, worst, 1e-12, detail))
}

/// NLL of any count is at least −log of the first upper bound.
pub fn check_loss_lower_bound(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("loss-lower-bound", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 1, 30);
        let floor = -pbd::diagnostics(&p)?.first_upper_bound.ln();
        for y in 0..=p.len() {
            let nll = pbd::nll(&p, y, p.len())?;
            let violation = floor - nll;
            if violation > worst {
                worst = violation;
                detail = format!("trial {trial} (seed {seed}): y={y}, nll {nll} < floor {floor}");
            }
        }
    }
    Ok(PropReport::new("loss-lower-bound", trials, worst, 1e-9, detail))
}

/// Cumulative variance increments equal p(1−p), so the series never
/// decreases.
pub fn check_variance_increments(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("variance-increments", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 1, 100);
        let report = pbd::diagnostics(&p)?;
        let mut prev = 0.0;
        for (t, &series) in report.variance_series.iter().enumerate() {
            let pt = p.as_slice()[t];
            let slack = ((series - prev) - pt * (1.0 - pt)).abs();
            if slack > worst {
                worst = slack;
                detail = format!("trial {trial} (seed {seed}): t={t} increment err {slack:e}");
            }
            prev = series;
        }
    }
    Ok(PropReport::new("variance-increments", trials, worst, 1e-12, detail))
}

/// The variance series matches the variance of the untruncated prefix
/// distribution itself.
pub fn check_variance_matches_distribution(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("variance-distribution", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 1, 100);
        let report = pbd::diagnostics(&p)?;
        let prefixes = pbd::prefix_pmfs(&p)?;
        for (t, (&series, dist)) in report.variance_series.iter().zip(&prefixes).enumerate() {
            let slack = (series - dist.variance()).abs();
            if slack > worst {
                worst = slack;
                detail = format!("trial {trial} (seed {seed}): t={t} variance err {slack:e}");
            }
        }
    }
    Ok(PropReport::new("variance-distribution", trials, worst, 1e-10, detail))
}

/// Reverse-mode gradient vs the leave-one-out enumeration oracle.
pub fn check_gradient_oracle(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("gradient-oracle", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 1, 12);
        let y = rng.gen_range(0..=p.len());
        let fast = pbd::nll_grad(&p, y, p.len())?;
        let exact = pbd::grad_oracle(&p, y)?;
        for (a, b) in fast.iter().zip(&exact) {
            let diff = (a - b).abs();
            if diff > worst {
                worst = diff;
                detail = format!("trial {trial} (seed {seed}): y={y}, grad err {diff:e}");
            }
        }
    }
    Ok(PropReport::new("gradient-oracle", trials, worst, 1e-12, detail))
}

/// Reverse-mode gradient vs central finite differences.
pub fn check_gradient_fd(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("gradient-fd", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    let h = 1e-6;
    for trial in 0..trials {
        let t_len = 8;
        let probs: Vec<f64> = (0..t_len).map(|_| 0.05 + 0.9 * rng.gen::<f64>()).collect();
        let y = rng.gen_range(0..=4);
        let p = ProbSequence::new(probs.clone()).unwrap();
        let grad = pbd::nll_grad(&p, y, t_len)?;
        for t in 0..t_len {
            let mut hi = probs.clone();
            let mut lo = probs.clone();
            hi[t] += h;
            lo[t] -= h;
            let f_hi = pbd::nll(&ProbSequence::new(hi).unwrap(), y, t_len)?;
            let f_lo = pbd::nll(&ProbSequence::new(lo).unwrap(), y, t_len)?;
            let fd = (f_hi - f_lo) / (2.0 * h);
            let rel = (grad[t] - fd).abs() / grad[t].abs().max(fd.abs()).max(1e-8);
            if rel > worst {
                worst = rel;
                detail = format!("trial {trial} (seed {seed}): t={t} rel err {rel:e}");
            }
        }
    }
    Ok(PropReport::new("gradient-fd", trials, worst, 1e-5, detail))
}

/// The count distribution ignores the order of the probabilities.
pub fn check_permutation_invariance(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("permutation-invariance", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 2, 50);
        let mut shuffled = p.as_slice().to_vec();
        for i in (1..shuffled.len()).rev() {
            let j = rng.gen_range(0..=i);
            shuffled.swap(i, j);
        }
        let a = pbd::pmf(&p, p.len())?;
        let b = pbd::pmf(&ProbSequence::new(shuffled).unwrap(), p.len())?;
        for (x, y) in a.masses().iter().zip(b.masses()) {
            let diff = (x - y).abs();
            if diff > worst {
                worst = diff;
                detail = format!("trial {trial} (seed {seed}): bin diff {diff:e}");
            }
        }
    }
    Ok(PropReport::new(
        "permutation-invariance",
        trials,
        worst,
        1e-12,
        detail,
    ))
}

/// One sample, one channel: the batch loss equals the plain NLL exactly.
pub fn check_batch_single_equality(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("batch-single-equality", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 1, 40);
        let y = rng.gen_range(0..=p.len());
        let k_max = rng.gen_range(1..=p.len());
        let mut m = Mat::zeros(p.len(), 1);
        for (t, &v) in p.as_slice().iter().enumerate() {
            m.set(t, 0, v);
        }
        let report = loss::batch_nll(&[m], &[CountLabel::new(vec![y])?], k_max)?;
        let direct = pbd::nll(&p, y, k_max)?;
        if report.total != direct {
            worst = worst.max((report.total - direct).abs());
            detail = format!("trial {trial} (seed {seed}): batch {} vs nll {direct}", report.total);
        }
    }
    Ok(PropReport::new("batch-single-equality", trials, worst, 0.0, detail))
}

/// Multi-channel loss equals the sum of single-channel losses.
pub fn check_channel_decomposition(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("channel-decomposition", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let n = rng.gen_range(1..=4);
        let channels = rng.gen_range(2..=4);
        let k_max = rng.gen_range(1..=20);
        let mut mats = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let t_len = rng.gen_range(1..=30);
            let mut m = Mat::zeros(t_len, channels);
            for v in m.data_mut() {
                *v = rng.gen::<f64>();
            }
            mats.push(m);
            labels.push(CountLabel::new(
                (0..channels).map(|_| rng.gen_range(0..=6)).collect(),
            )?);
        }
        let joint = loss::batch_nll(&mats, &labels, k_max)?;
        let mut channel_sum = 0.0;
        for c in 0..channels {
            let single_mats: Vec<Mat<f64>> = mats
                .iter()
                .map(|m| {
                    let mut s = Mat::zeros(m.rows(), 1);
                    for t in 0..m.rows() {
                        s.set(t, 0, m.get(t, c));
                    }
                    s
                })
                .collect();
            let single_labels: Vec<CountLabel> = labels
                .iter()
                .map(|l| CountLabel::new(vec![l.count(c)]).unwrap())
                .collect();
            channel_sum += loss::batch_nll(&single_mats, &single_labels, k_max)?.total;
        }
        let diff = (joint.total - channel_sum).abs();
        if diff > worst {
            worst = diff;
            detail = format!("trial {trial} (seed {seed}): diff {diff:e}");
        }
    }
    Ok(PropReport::new("channel-decomposition", trials, worst, 1e-12, detail))
}

/// Head-bias initialization puts ω mass on the zero bin across the grid
/// ω ∈ {0.1, 0.3, 0.5, 0.9} × T ∈ {1, 10, 100, 400}.
pub fn check_init_mass_grid(_seed: u64, _trials: usize) -> Result<PropReport> {
    let mut worst = 0.0f64;
    let mut detail = String::new();
    let mut cases = 0;
    for &omega in &[0.1f64, 0.3, 0.5, 0.9] {
        for &t_len in &[1usize, 10, 100, 400] {
            cases += 1;
            let bias = loss::init_bias(omega, t_len)?;
            let p = sigmoid(bias);
            let probs = ProbSequence::new(vec![p; t_len])?;
            let zero_mass = pbd::pmf(&probs, t_len)?.mass(0);
            let err = (zero_mass - omega).abs();
            if err > worst {
                worst = err;
                detail = format!("omega={omega}, T={t_len}: |mass - omega| = {err:e}");
            }
        }
    }
    Ok(PropReport::new("init-mass-grid", cases, worst, 1e-9, detail))
}

/// Batch-loss gradients vs central finite differences.
pub fn check_batch_grad_fd(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("batch-grad-fd", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    let h = 1e-6;
    for trial in 0..trials.min(50) {
        let n = rng.gen_range(1..=3);
        let channels = rng.gen_range(1..=2);
        let k_max = 6;
        let mut mats = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let t_len = rng.gen_range(2..=6);
            let mut m = Mat::zeros(t_len, channels);
            for v in m.data_mut() {
                *v = 0.05 + 0.9 * rng.gen::<f64>();
            }
            mats.push(m);
            labels.push(CountLabel::new(
                (0..channels).map(|_| rng.gen_range(0..=3)).collect(),
            )?);
        }
        let (_, grads) = loss::batch_nll_with_grad(&mats, &labels, k_max)?;
        for (i, m) in mats.iter().enumerate() {
            for t in 0..m.rows() {
                for c in 0..channels {
                    let mut hi = mats.clone();
                    let mut lo = mats.clone();
                    hi[i].set(t, c, m.get(t, c) + h);
                    lo[i].set(t, c, m.get(t, c) - h);
                    let f_hi = loss::batch_nll(&hi, &labels, k_max)?.total;
                    let f_lo = loss::batch_nll(&lo, &labels, k_max)?.total;
                    let fd = (f_hi - f_lo) / (2.0 * h);
                    let a = grads[i].get(t, c);
                    let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
                    if rel > worst {
                        worst = rel;
                        detail =
                            format!("trial {trial} (seed {seed}): sample {i} t={t} c={c} rel {rel:e}");
                    }
                }
            }
        }
    }
    Ok(PropReport::new("batch-grad-fd", trials.min(50), worst, 1e-5, detail))
}

/// Index/coordinate bijection for every order up to 6.
pub fn check_hilbert_bijection(_seed: u64, _trials: usize) -> Result<PropReport> {
    let mut worst = 0.0f64;
    let mut detail = String::new();
    let mut cells_checked = 0;
    for order in 1..=6u32 {
        let cells = 1usize << (2 * order);
        let mut seen = vec![false; cells];
        for d in 0..cells {
            cells_checked += 1;
            let (x, y) = hilbert::d2xy(order, d)?;
            let back = hilbert::xy2d(order, x, y)?;
            let flat = y * (1 << order) + x;
            if back != d || seen[flat] {
                worst = 1.0;
                detail = format!("order {order}: index {d} -> ({x}, {y}) -> {back}");
            }
            seen[flat] = true;
        }
    }
    Ok(PropReport::new("hilbert-bijection", cells_checked, worst, 0.0, detail))
}

/// Consecutive curve indices are Manhattan neighbors, all orders ≤ 6.
pub fn check_hilbert_adjacency(_seed: u64, _trials: usize) -> Result<PropReport> {
    let mut worst = 0.0f64;
    let mut detail = String::new();
    let mut steps = 0;
    for order in 1..=6u32 {
        let cells = 1usize << (2 * order);
        let mut prev = hilbert::d2xy(order, 0)?;
        for d in 1..cells {
            steps += 1;
            let cur = hilbert::d2xy(order, d)?;
            let dist = prev.0.abs_diff(cur.0) + prev.1.abs_diff(cur.1);
            let slack = (dist as f64 - 1.0).abs();
            if slack > worst {
                worst = slack;
                detail = format!("order {order}: step {d} moved distance {dist}");
            }
            prev = cur;
        }
    }
    Ok(PropReport::new("hilbert-adjacency", steps, worst, 0.0, detail))
}

/// Scanning tiles the (padded) image exactly: no overlap, no gap.
pub fn check_scan_tiling(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("scan-tiling", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    let trials = trials.min(20);
    for trial in 0..trials {
        let order = rng.gen_range(1..=3u32);
        let cell = rng.gen_range(2..=5usize);
        let curve = hilbert::HilbertCurve::new(order, cell, cell)?;
        let grid = curve.side() * cell;
        let w = rng.gen_range(1..=grid);
        let hgt = rng.gen_range(1..=grid);
        let mut img = Image::<f64>::zeros(w, hgt, 1);
        for v in img.data_mut() {
            *v = rng.gen::<f64>();
        }
        let scan = hilbert::scan_image(&img, &curve)?;
        let mut rebuilt = Image::<f64>::zeros(grid, grid, 1);
        for d in 0..curve.cells() {
            let (cx, cy) = hilbert::d2xy(order, d)?;
            let row = scan.features.row(d);
            let mut k = 0;
            for wy in 0..cell {
                for wx in 0..cell {
                    rebuilt.set(cx * cell + wx, cy * cell + wy, 0, row[k]);
                    k += 1;
                }
            }
        }
        for y in 0..grid {
            for x in 0..grid {
                let want = if x < w && y < hgt { img.get(x, y, 0) } else { 0.0 };
                let diff = (rebuilt.get(x, y, 0) - want).abs();
                if diff > worst {
                    worst = diff;
                    detail = format!("trial {trial} (seed {seed}): pixel ({x}, {y}) off by {diff}");
                }
            }
        }
    }
    Ok(PropReport::new("scan-tiling", trials, worst, 0.0, detail))
}

/// Decoded events always satisfy ordering and separation.
pub fn check_decode_invariants(seed: u64, trials: usize) -> Result<PropReport> {
    let mut rng = rng_for("decode-invariants", seed);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for trial in 0..trials {
        let p = random_seq(&mut rng, 1, 80);
        let min_sep = rng.gen_range(1..=6);
        let decoded = eval::decode(&p, 0.5, min_sep);
        for w in decoded.times.windows(2) {
            if w[1] <= w[0] || w[1] - w[0] < min_sep {
                worst = 1.0;
                detail = format!("trial {trial} (seed {seed}): times {:?}", decoded.times);
            }
        }
    }
    Ok(PropReport::new("decode-invariants", trials, worst, 0.0, detail))
}

/// All invariant suites in a fixed order.
pub fn run_all(seed: u64, trials: usize) -> Result<Vec<PropReport>> {
    if trials == 0 {
        return Err(Error::invalid_input("trial count must be at least 1"));
    }
    Ok(vec![
        check_oracle_equivalence(seed, trials)?,
        check_normalization(seed, trials)?,
        check_decreasing_maximum(seed, trials)?,
        check_monotone_count_cdf(seed, trials)?,
        check_bound_validity(seed, trials)?,
        check_loss_lower_bound(seed, trials)?,
        check_variance_increments(seed, trials)?,
        check_variance_matches_distribution(seed, trials)?,
        check_gradient_oracle(seed, trials)?,
        check_gradient_fd(seed, trials)?,
        check_permutation_invariance(seed, trials)?,
        check_batch_single_equality(seed, trials)?,
        check_channel_decomposition(seed, trials)?,
        check_init_mass_grid(seed, trials)?,
        check_batch_grad_fd(seed, trials)?,
        check_hilbert_bijection(seed, trials)?,
        check_hilbert_adjacency(seed, trials)?,
        check_scan_tiling(seed, trials)?,
        check_decode_invariants(seed, trials)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_invariants_pass_at_small_budget() {
        let reports = run_all(7, 60).unwrap();
        for r in &reports {
            assert!(
                r.passed,
                "{} failed: slack {:e} > {:e} ({})",
                r.name, r.worst_slack, r.tolerance, r.detail
            );
        }
        assert_eq!(reports.len(), 19);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(run_all(1, 0).is_err());
    }

    #[test]
    fn injected_fault_is_caught_by_oracle_equivalence() {
        fn broken_pmf(p: &ProbSequence<f64>, k_max: usize) -> Result<CountDistribution<f64>> {
            // Simulated recursion fault: one probability enters inverted.
            let mut probs = p.as_slice().to_vec();
            probs[0] = 1.0 - probs[0];
            pbd::pmf(&ProbSequence::new(probs)?, k_max)
        }
        let report = oracle_equivalence_impl(3, 40, broken_pmf).unwrap();
        assert!(!report.passed);
        assert_eq!(report.name, "oracle-equivalence");
    }
}
