//! Minimal trainable sequence model: linear input projection, a gated
//! recurrent unit, and a dense sigmoid head producing per-step event
//! probabilities. Backpropagation through time is hand-derived and
//! verified against central finite differences; the optimizer is Adam
//! with bias correction.
//!
//! The model is strictly causal: p(t) depends only on inputs up to t.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::loss::{self, CountLabel};
use crate::mat::Mat;
use crate::pbd::ProbSequence;
use crate::scalar::{sigmoid, Scalar};

/// Tensor sizes of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruDims {
    /// Feature dimension of the input sequence.
    pub input: usize,
    /// Hidden state width.
    pub hidden: usize,
    /// Output channels (event classes).
    pub channels: usize,
}

/// All trainable tensors. Gradients reuse the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    dims: GruDims,
    w_in: Mat<S>,
    b_in: Vec<S>,
    w_update: Mat<S>,
    u_update: Mat<S>,
    b_update: Vec<S>,
    w_reset: Mat<S>,
    u_reset: Mat<S>,
    b_reset: Vec<S>,
    w_cand: Mat<S>,
    u_cand: Mat<S>,
    b_cand: Vec<S>,
    w_out: Mat<S>,
    b_out: Vec<S>,
}

/// Name of every tensor, in serialization order.
pub const TENSOR_NAMES: [&str; 13] = [
    "input_proj.weight",
    "input_proj.bias",
    "gru.update.input_weight",
    "gru.update.recurrent_weight",
    "gru.update.bias",
    "gru.reset.input_weight",
    "gru.reset.recurrent_weight",
    "gru.reset.bias",
    "gru.candidate.input_weight",
    "gru.candidate.recurrent_weight",
    "gru.candidate.bias",
    "head.weight",
    "head.bias",
];

impl<S: Scalar> ModelParams<S> {
    pub fn zeros(dims: GruDims) -> Self {
        let h = dims.hidden;
        ModelParams {
            dims,
            w_in: Mat::zeros(dims.input, h),
            b_in: vec![S::zero(); h],
            w_update: Mat::zeros(h, h),
            u_update: Mat::zeros(h, h),
            b_update: vec![S::zero(); h],
            w_reset: Mat::zeros(h, h),
            u_reset: Mat::zeros(h, h),
            b_reset: vec![S::zero(); h],
            w_cand: Mat::zeros(h, h),
            u_cand: Mat::zeros(h, h),
            b_cand: vec![S::zero(); h],
            w_out: Mat::zeros(h, dims.channels),
            b_out: vec![S::zero(); dims.channels],
        }
    }

    /// Uniform init in [−s, s] with s = 1/sqrt(fan_in); biases zero except
    /// the head bias, which carries the zero-count mass initialization.
    pub fn init(dims: GruDims, seed: u64, head_bias: S) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Self::zeros(dims);
        let mut fill = |m: &mut Mat<S>, fan_in: usize| {
            let scale = 1.0 / (fan_in as f64).sqrt();
            for w in m.data_mut() {
                *w = S::from_f64_lossy((2.0 * rng.gen::<f64>() - 1.0) * scale);
            }
        };
        fill(&mut params.w_in, dims.input);
        fill(&mut params.w_update, dims.hidden);
        fill(&mut params.u_update, dims.hidden);
        fill(&mut params.w_reset, dims.hidden);
        fill(&mut params.u_reset, dims.hidden);
        fill(&mut params.w_cand, dims.hidden);
        fill(&mut params.u_cand, dims.hidden);
        fill(&mut params.w_out, dims.hidden);
        for b in params.b_out.iter_mut() {
            *b = head_bias;
        }
        params
    }

    pub fn dims(&self) -> GruDims {
        self.dims
    }

    pub fn tensor_count() -> usize {
        TENSOR_NAMES.len()
    }

    pub fn tensor(&self, i: usize) -> &[S] {
        match i {
            0 => self.w_in.data(),
            1 => &self.b_in,
            2 => self.w_update.data(),
            3 => self.u_update.data(),
            4 => &self.b_update,
            5 => self.w_reset.data(),
            6 => self.u_reset.data(),
            7 => &self.b_reset,
            8 => self.w_cand.data(),
            9 => self.u_cand.data(),
            10 => &self.b_cand,
            11 => self.w_out.data(),
            12 => &self.b_out,
            _ => panic!("tensor index out of range"),
        }
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut [S] {
        match i {
            0 => self.w_in.data_mut(),
            1 => &mut self.b_in,
            2 => self.w_update.data_mut(),
            3 => self.u_update.data_mut(),
            4 => &mut self.b_update,
            5 => self.w_reset.data_mut(),
            6 => self.u_reset.data_mut(),
            7 => &mut self.b_reset,
            8 => self.w_cand.data_mut(),
            9 => self.u_cand.data_mut(),
            10 => &mut self.b_cand,
            11 => self.w_out.data_mut(),
            12 => &mut self.b_out,
            _ => panic!("tensor index out of range"),
        }
    }

    pub fn tensor_shape(&self, i: usize) -> Vec<usize> {
        let h = self.dims.hidden;
        match i {
            0 => vec![self.dims.input, h],
            1 | 4 | 7 | 10 => vec![h],
            2 | 3 | 5 | 6 | 8 | 9 => vec![h, h],
            11 => vec![h, self.dims.channels],
            12 => vec![self.dims.channels],
            _ => panic!("tensor index out of range"),
        }
    }

    pub fn flat_len(&self) -> usize {
        (0..Self::tensor_count()).map(|i| self.tensor(i).len()).sum()
    }

    fn locate(&self, flat: usize) -> (usize, usize) {
        let mut offset = flat;
        for i in 0..Self::tensor_count() {
            let len = self.tensor(i).len();
            if offset < len {
                return (i, offset);
            }
            offset -= len;
        }
        panic!("flat index out of range");
    }

    pub fn get_flat(&self, flat: usize) -> S {
        let (i, off) = self.locate(flat);
        self.tensor(i)[off]
    }

    pub fn add_flat(&mut self, flat: usize, delta: S) {
        let (i, off) = self.locate(flat);
        let slot = &mut self.tensor_mut(i)[off];
        *slot = *slot + delta;
    }

    /// Head bias, where the zero-count initialization lives.
    pub fn head_bias(&self) -> &[S] {
        &self.b_out
    }

    pub fn head_bias_mut(&mut self) -> &mut [S] {
        &mut self.b_out
    }

    /// Accumulate `alpha * other` into self (used for batch averaging).
    pub fn add_scaled(&mut self, other: &ModelParams<S>, alpha: S) {
        for i in 0..Self::tensor_count() {
            let dst = self.tensor_mut(i);
            let src = other.tensor(i);
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = *d + alpha * s;
            }
        }
    }
}

/// Per-step activations retained for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<S> {
    dims: GruDims,
    inputs: Mat<S>,
    projected: Mat<S>,
    update: Mat<S>,
    reset: Mat<S>,
    candidate: Mat<S>,
    reset_hidden: Mat<S>,
    /// Hidden states h(0..=T); row 0 is the initial zero state.
    hidden: Mat<S>,
    probs: Mat<S>,
}

impl<S: Scalar> ForwardCache<S> {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    pub fn hidden_states(&self) -> &Mat<S> {
        &self.hidden
    }
}

/// Runs the model over a T×input feature matrix, returning the T×channels
/// probability matrix and the cache for [`backward`].
pub fn forward<S: Scalar>(
    params: &ModelParams<S>,
    x: &Mat<S>,
) -> Result<(Mat<S>, ForwardCache<S>)> {
    let dims = params.dims;
    if x.cols() != dims.input {
        return Err(Error::invalid_input(format!(
            "input has {} features, model expects {}",
            x.cols(),
            dims.input
        )));
    }
    if x.rows() == 0 {
        return Err(Error::invalid_input("empty input sequence"));
    }
    let t_len = x.rows();
    let h = dims.hidden;
    let one = S::one();

    let mut projected = Mat::zeros(t_len, h);
    let mut update = Mat::zeros(t_len, h);
    let mut reset = Mat::zeros(t_len, h);
    let mut candidate = Mat::zeros(t_len, h);
    let mut reset_hidden = Mat::zeros(t_len, h);
    let mut hidden = Mat::zeros(t_len + 1, h);
    let mut probs = Mat::zeros(t_len, dims.channels);

    for t in 0..t_len {
        // u = x W_in + b_in
        let u_row = projected.row_mut(t);
        u_row.copy_from_slice(&params.b_in);
        params.w_in.vecmat_add(x.row(t), u_row);
        let u_owned = projected.row(t).to_vec();
        let h_prev = hidden.row(t).to_vec();

        // Gates.
        let z_row = update.row_mut(t);
        z_row.copy_from_slice(&params.b_update);
        params.w_update.vecmat_add(&u_owned, z_row);
        params.u_update.vecmat_add(&h_prev, z_row);
        for v in z_row.iter_mut() {
            *v = sigmoid(*v);
        }

        let r_row = reset.row_mut(t);
        r_row.copy_from_slice(&params.b_reset);
        params.w_reset.vecmat_add(&u_owned, r_row);
        params.u_reset.vecmat_add(&h_prev, r_row);
        for v in r_row.iter_mut() {
            *v = sigmoid(*v);
        }

        for j in 0..h {
            reset_hidden.set(t, j, reset.get(t, j) * h_prev[j]);
        }
        let rh_owned = reset_hidden.row(t).to_vec();

        let c_row = candidate.row_mut(t);
        c_row.copy_from_slice(&params.b_cand);
        params.w_cand.vecmat_add(&u_owned, c_row);
        params.u_cand.vecmat_add(&rh_owned, c_row);
        for v in c_row.iter_mut() {
            *v = v.tanh();
        }

        // Convex mix keeps the hidden state inside [−1, 1].
        for j in 0..h {
            let z = update.get(t, j);
            let hv = (one - z) * h_prev[j] + z * candidate.get(t, j);
            hidden.set(t + 1, j, hv);
        }

        let p_row = probs.row_mut(t);
        p_row.copy_from_slice(&params.b_out);
        params.w_out.vecmat_add(hidden.row(t + 1), p_row);
        for v in p_row.iter_mut() {
            *v = sigmoid(*v);
        }
    }

    let cache = ForwardCache {
        dims,
        inputs: x.clone(),
        projected,
        update,
        reset,
        candidate,
        reset_hidden,
        hidden,
        probs: probs.clone(),
    };
    Ok((probs, cache))
}

/// Exact parameter gradients for a scalar loss with the given ∂loss/∂p.
pub fn backward<S: Scalar>(
    params: &ModelParams<S>,
    cache: &ForwardCache<S>,
    dl_dp: &Mat<S>,
) -> Result<ModelParams<S>> {
    let dims = params.dims;
    if cache.dims != dims {
        return Err(Error::InvalidState(
            "forward cache was produced by a different model shape".into(),
        ));
    }
    if dl_dp.rows() != cache.len() || dl_dp.cols() != dims.channels {
        return Err(Error::InvalidState(format!(
            "loss gradient is {}x{}, cache expects {}x{}",
            dl_dp.rows(),
            dl_dp.cols(),
            cache.len(),
            dims.channels
        )));
    }

    let h = dims.hidden;
    let one = S::one();
    let mut grads = ModelParams::zeros(dims);
    let mut dh_next = vec![S::zero(); h];

    for t in (0..cache.len()).rev() {
        // Head: p = sigmoid(h W_out + b_out).
        let mut da = vec![S::zero(); dims.channels];
        for c in 0..dims.channels {
            let p = cache.probs.get(t, c);
            da[c] = dl_dp.get(t, c) * p * (one - p);
        }
        let h_t = cache.hidden.row(t + 1).to_vec();
        grads.w_out.outer_add(&h_t, &da);
        for (g, &d) in grads.b_out.iter_mut().zip(&da) {
            *g = *g + d;
        }
        let mut dh = dh_next.clone();
        params.w_out.vecmat_t_add(&da, &mut dh);

        let h_prev = cache.hidden.row(t).to_vec();
        let u = cache.projected.row(t).to_vec();
        let rh = cache.reset_hidden.row(t).to_vec();

        // h = (1−z) h_prev + z c
        let mut dz = vec![S::zero(); h];
        let mut dc = vec![S::zero(); h];
        let mut dh_prev = vec![S::zero(); h];
        for j in 0..h {
            let z = cache.update.get(t, j);
            let c = cache.candidate.get(t, j);
            dz[j] = dh[j] * (c - h_prev[j]);
            dc[j] = dh[j] * z;
            dh_prev[j] = dh[j] * (one - z);
        }

        // c = tanh(u W_c + (r ∘ h_prev) U_c + b_c)
        let mut dc_pre = vec![S::zero(); h];
        for j in 0..h {
            let c = cache.candidate.get(t, j);
            dc_pre[j] = dc[j] * (one - c * c);
        }
        grads.w_cand.outer_add(&u, &dc_pre);
        grads.u_cand.outer_add(&rh, &dc_pre);
        for (g, &d) in grads.b_cand.iter_mut().zip(&dc_pre) {
            *g = *g + d;
        }
        let mut du = vec![S::zero(); h];
        params.w_cand.vecmat_t_add(&dc_pre, &mut du);
        let mut drh = vec![S::zero(); h];
        params.u_cand.vecmat_t_add(&dc_pre, &mut drh);
        let mut dr = vec![S::zero(); h];
        for j in 0..h {
            dr[j] = drh[j] * h_prev[j];
            dh_prev[j] = dh_prev[j] + drh[j] * cache.reset.get(t, j);
        }

        // r = sigmoid(u W_r + h_prev U_r + b_r)
        let mut dr_pre = vec![S::zero(); h];
        for j in 0..h {
            let r = cache.reset.get(t, j);
            dr_pre[j] = dr[j] * r * (one - r);
        }
        grads.w_reset.outer_add(&u, &dr_pre);
        grads.u_reset.outer_add(&h_prev, &dr_pre);
        for (g, &d) in grads.b_reset.iter_mut().zip(&dr_pre) {
            *g = *g + d;
        }
        params.w_reset.vecmat_t_add(&dr_pre, &mut du);
        params.u_reset.vecmat_t_add(&dr_pre, &mut dh_prev);

        // z = sigmoid(u W_z + h_prev U_z + b_z)
        let mut dz_pre = vec![S::zero(); h];
        for j in 0..h {
            let z = cache.update.get(t, j);
            dz_pre[j] = dz[j] * z * (one - z);
        }
        grads.w_update.outer_add(&u, &dz_pre);
        grads.u_update.outer_add(&h_prev, &dz_pre);
        for (g, &d) in grads.b_update.iter_mut().zip(&dz_pre) {
            *g = *g + d;
        }
        params.w_update.vecmat_t_add(&dz_pre, &mut du);
        params.u_update.vecmat_t_add(&dz_pre, &mut dh_prev);

        // u = x W_in + b_in
        grads.w_in.outer_add(cache.inputs.row(t), &du);
        for (g, &d) in grads.b_in.iter_mut().zip(&du) {
            *g = *g + d;
        }

        dh_next = dh_prev;
    }

    Ok(grads)
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState<S> {
    pub m: ModelParams<S>,
    pub v: ModelParams<S>,
    pub step: u64,
    pub cfg: AdamConfig,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(dims: GruDims, cfg: AdamConfig) -> Self {
        AdamState {
            m: ModelParams::zeros(dims),
            v: ModelParams::zeros(dims),
            step: 0,
            cfg,
        }
    }
}

/// One Adam update with bias correction folded into the step size:
/// α_t = lr · sqrt(1 − β₂ᵗ) / (1 − β₁ᵗ), θ ← θ − α_t · m / (√v + ε).
pub fn adam_step<S: Scalar>(
    params: &mut ModelParams<S>,
    grads: &ModelParams<S>,
    state: &mut AdamState<S>,
) -> Result<()> {
    if params.dims != grads.dims || params.dims != state.m.dims {
        return Err(Error::InvalidState("optimizer/model shape mismatch".into()));
    }
    let t = state.step + 1;
    let cfg = state.cfg;
    let alpha =
        S::from_f64_lossy(cfg.lr * (1.0 - cfg.beta2.powi(t as i32)).sqrt() / (1.0 - cfg.beta1.powi(t as i32)));
    let b1 = S::from_f64_lossy(cfg.beta1);
    let b2 = S::from_f64_lossy(cfg.beta2);
    let eps = S::from_f64_lossy(cfg.eps);
    let one = S::one();

    for i in 0..ModelParams::<S>::tensor_count() {
        let g = grads.tensor(i);
        for &gv in g {
            if !gv.is_finite() {
                return Err(Error::Diverged {
                    step: t,
                    tensor: TENSOR_NAMES[i].to_string(),
                    detail: format!("non-finite gradient {gv}"),
                });
            }
        }
        let m = state.m.tensor_mut(i);
        for (mv, &gv) in m.iter_mut().zip(g) {
            *mv = b1 * *mv + (one - b1) * gv;
        }
        let v = state.v.tensor_mut(i);
        for (vv, &gv) in v.iter_mut().zip(g) {
            *vv = b2 * *vv + (one - b2) * gv * gv;
        }
        let theta = params.tensor_mut(i);
        let m = state.m.tensor(i);
        let v = state.v.tensor(i);
        for ((tv, &mv), &vv) in theta.iter_mut().zip(m).zip(v) {
            *tv = *tv - alpha * mv / (vv.sqrt() + eps);
        }
    }
    state.step = t;
    Ok(())
}

/// Scales gradients so their global L2 norm does not exceed `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_grad_norm<S: Scalar>(grads: &mut ModelParams<S>, max_norm: f64) -> f64 {
    let mut sq = 0.0f64;
    for i in 0..ModelParams::<S>::tensor_count() {
        for &g in grads.tensor(i) {
            let g = g.to_f64_lossy();
            sq += g * g;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = S::from_f64_lossy(max_norm / norm);
        for i in 0..ModelParams::<S>::tensor_count() {
            for g in grads.tensor_mut(i) {
                *g = *g * scale;
            }
        }
    }
    norm
}

/// Loss of the full pipeline (forward → clamp → count NLL) for one sample.
pub fn pipeline_loss<S: Scalar>(
    params: &ModelParams<S>,
    x: &Mat<S>,
    label: &CountLabel,
    k_max: usize,
    eps_p: S,
) -> Result<S> {
    let (probs, _) = forward(params, x)?;
    let clamped = clamp_columns(&probs, eps_p)?.0;
    let report = loss::batch_nll(std::slice::from_ref(&clamped), std::slice::from_ref(label), k_max)?;
    Ok(report.total)
}

/// Loss and exact parameter gradients of the full pipeline for one sample.
pub fn pipeline_loss_grad<S: Scalar>(
    params: &ModelParams<S>,
    x: &Mat<S>,
    label: &CountLabel,
    k_max: usize,
    eps_p: S,
) -> Result<(S, ModelParams<S>)> {
    let (probs, cache) = forward(params, x)?;
    let (clamped, mask) = clamp_columns(&probs, eps_p)?;
    let (report, mut dl_dp) =
        loss::batch_nll_with_grad(std::slice::from_ref(&clamped), std::slice::from_ref(label), k_max)?;
    let mut dl = dl_dp.pop().expect("one gradient per sample");
    // Clamped entries are flat: no gradient flows back through them.
    for (idx, &clamped_here) in mask.iter().enumerate() {
        if clamped_here {
            let (t, c) = (idx / probs.cols(), idx % probs.cols());
            dl.set(t, c, S::zero());
        }
    }
    let grads = backward(params, &cache, &dl)?;
    Ok((report.total, grads))
}

fn clamp_columns<S: Scalar>(probs: &Mat<S>, eps_p: S) -> Result<(Mat<S>, Vec<bool>)> {
    let mut out = Mat::zeros(probs.rows(), probs.cols());
    let mut mask = vec![false; probs.rows() * probs.cols()];
    for c in 0..probs.cols() {
        let column = ProbSequence::new(probs.column(c))?;
        let (clamped, col_mask) = loss::clamp_probs_with_mask(&column, eps_p);
        for t in 0..probs.rows() {
            out.set(t, c, clamped.as_slice()[t]);
            mask[t * probs.cols() + c] = col_mask[t];
        }
    }
    Ok((out, mask))
}

/// Compares analytic full-pipeline gradients against central finite
/// differences parameter-by-parameter; returns the worst relative error.
/// Diagnostic tool: large `h` produces a large report, never an error.
pub fn grad_check<S: Scalar>(
    params: &ModelParams<S>,
    x: &Mat<S>,
    label: &CountLabel,
    k_max: usize,
    eps_p: S,
    h: f64,
) -> Result<f64> {
    let (_, analytic) = pipeline_loss_grad(params, x, label, k_max, eps_p)?;
    let mut probe = params.clone();
    let step = S::from_f64_lossy(h);
    let mut worst = 0.0f64;
    for flat in 0..params.flat_len() {
        probe.add_flat(flat, step);
        let up = pipeline_loss(&probe, x, label, k_max, eps_p)?.to_f64_lossy();
        probe.add_flat(flat, -(step + step));
        let down = pipeline_loss(&probe, x, label, k_max, eps_p)?.to_f64_lossy();
        probe.add_flat(flat, step);
        let fd = (up - down) / (2.0 * h);
        let a = analytic.get_flat(flat).to_f64_lossy();
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-4);
        if rel > worst {
            worst = rel;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dims() -> GruDims {
        GruDims {
            input: 3,
            hidden: 4,
            channels: 1,
        }
    }

    fn random_input(dims: GruDims, t_len: usize, seed: u64) -> Mat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Mat::zeros(t_len, dims.input);
        for v in x.data_mut() {
            *v = rng.gen::<f64>() * 2.0 - 1.0;
        }
        x
    }

    #[test]
    fn zero_weights_emit_sigmoid_of_bias() {
        let dims = tiny_dims();
        let mut params = ModelParams::<f64>::zeros(dims);
        params.head_bias_mut()[0] = -1.25;
        let x = random_input(dims, 6, 7);
        let (p, _) = forward(&params, &x).unwrap();
        let want = sigmoid(-1.25f64);
        for t in 0..6 {
            assert_eq!(p.get(t, 0), want);
        }
    }

    #[test]
    fn outputs_are_causal() {
        let dims = tiny_dims();
        let params = ModelParams::<f64>::init(dims, 3, 0.0);
        let x = random_input(dims, 8, 11);
        let (p, _) = forward(&params, &x).unwrap();
        let t0 = 5;
        let mut x2 = x.clone();
        x2.set(t0, 1, 10.0);
        let (p2, _) = forward(&params, &x2).unwrap();
        for t in 0..t0 {
            assert_eq!(p.row(t), p2.row(t), "output before t0 changed");
        }
        assert_ne!(p.row(t0), p2.row(t0));
    }

    #[test]
    fn forward_is_deterministic() {
        let dims = tiny_dims();
        let params = ModelParams::<f64>::init(dims, 5, -2.0);
        let x = random_input(dims, 10, 13);
        let (p1, _) = forward(&params, &x).unwrap();
        let (p2, _) = forward(&params, &x).unwrap();
        assert_eq!(p1.data(), p2.data());
    }

    #[test]
    fn hidden_states_bounded() {
        let dims = GruDims {
            input: 2,
            hidden: 6,
            channels: 2,
        };
        let params = ModelParams::<f64>::init(dims, 17, 0.0);
        let mut x = random_input(dims, 50, 19);
        for v in x.data_mut() {
            *v *= 25.0;
        }
        let (_, cache) = forward(&params, &x).unwrap();
        for &hv in cache.hidden_states().data() {
            assert!((-1.0..=1.0).contains(&hv));
        }
    }

    #[test]
    fn zero_loss_gradient_gives_zero_parameter_gradients() {
        let dims = tiny_dims();
        let params = ModelParams::<f64>::init(dims, 23, 0.0);
        let x = random_input(dims, 5, 29);
        let (p, cache) = forward(&params, &x).unwrap();
        let dl = Mat::zeros(p.rows(), p.cols());
        let grads = backward(&params, &cache, &dl).unwrap();
        for i in 0..ModelParams::<f64>::tensor_count() {
            assert!(grads.tensor(i).iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn backward_rejects_mismatched_cache() {
        let dims = tiny_dims();
        let params = ModelParams::<f64>::init(dims, 1, 0.0);
        let other = ModelParams::<f64>::init(
            GruDims {
                hidden: 5,
                ..dims
            },
            1,
            0.0,
        );
        let x = random_input(dims, 4, 2);
        let (p, cache) = forward(&params, &x).unwrap();
        let dl = Mat::zeros(p.rows(), p.cols());
        assert!(matches!(
            backward(&other, &cache, &dl),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn full_pipeline_gradient_matches_finite_differences() {
        let dims = tiny_dims();
        let params = ModelParams::<f64>::init(dims, 41, loss::init_bias(0.5, 5).unwrap());
        let x = random_input(dims, 5, 43);
        let label = CountLabel::new(vec![1]).unwrap();
        let worst = grad_check(&params, &x, &label, 5, 1e-6, 1e-5).unwrap();
        assert!(worst <= 1e-5, "max relative error {worst}");
    }

    #[test]
    fn zero_weight_model_gradient_check() {
        let dims = tiny_dims();
        let mut params = ModelParams::<f64>::zeros(dims);
        params.head_bias_mut()[0] = loss::init_bias(0.5, 5).unwrap();
        let x = random_input(dims, 5, 47);
        let label = CountLabel::new(vec![1]).unwrap();
        let worst = grad_check(&params, &x, &label, 5, 1e-6, 1e-5).unwrap();
        assert!(worst <= 1e-7, "max relative error {worst}");
    }

    #[test]
    fn coarse_step_reports_error_without_failing() {
        let dims = tiny_dims();
        let params = ModelParams::<f64>::init(dims, 53, 0.0);
        let x = random_input(dims, 4, 59);
        let label = CountLabel::new(vec![1]).unwrap();
        let worst = grad_check(&params, &x, &label, 4, 1e-6, 1e-1).unwrap();
        assert!(worst.is_finite());
    }

    #[test]
    fn batch_gradient_is_mean_of_per_sample_gradients() {
        let dims = tiny_dims();
        let params = ModelParams::<f64>::init(dims, 61, 0.0);
        let xs = [random_input(dims, 5, 67), random_input(dims, 7, 71)];
        let labels = [
            CountLabel::new(vec![1]).unwrap(),
            CountLabel::new(vec![2]).unwrap(),
        ];

        // Batch of two via shared forward/backward path.
        let mut batch_grads = ModelParams::<f64>::zeros(dims);
        let mut p_mats = Vec::new();
        let mut caches = Vec::new();
        for x in &xs {
            let (p, cache) = forward(&params, x).unwrap();
            p_mats.push(p);
            caches.push(cache);
        }
        let (_, dl) = loss::batch_nll_with_grad(&p_mats, &labels, 7).unwrap();
        for (cache, d) in caches.iter().zip(&dl) {
            let g = backward(&params, cache, d).unwrap();
            batch_grads.add_scaled(&g, 1.0);
        }

        // Mean of single-sample gradients.
        let mut mean_grads = ModelParams::<f64>::zeros(dims);
        for (x, label) in xs.iter().zip(&labels) {
            let (_, g) = pipeline_loss_grad(&params, x, label, 7, 0.0).unwrap();
            mean_grads.add_scaled(&g, 0.5);
        }

        for i in 0..ModelParams::<f64>::tensor_count() {
            for (a, b) in batch_grads.tensor(i).iter().zip(mean_grads.tensor(i)) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let dims = tiny_dims();
        let mut params = ModelParams::<f64>::init(dims, 73, 0.5);
        let before = params.clone();
        let grads = ModelParams::<f64>::zeros(dims);
        let mut state = AdamState::new(dims, AdamConfig::default());
        adam_step(&mut params, &grads, &mut state).unwrap();
        assert_eq!(params, before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn adam_first_step_magnitude_is_learning_rate() {
        let dims = GruDims {
            input: 1,
            hidden: 1,
            channels: 1,
        };
        let mut params = ModelParams::<f64>::zeros(dims);
        let mut grads = ModelParams::<f64>::zeros(dims);
        grads.tensor_mut(0)[0] = 0.37;
        let cfg = AdamConfig {
            lr: 1e-3,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(dims, cfg);
        adam_step(&mut params, &grads, &mut state).unwrap();
        let step = params.tensor(0)[0].abs();
        assert!((step - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn adam_repeated_gradient_approaches_learning_rate_monotonically() {
        let dims = GruDims {
            input: 1,
            hidden: 1,
            channels: 1,
        };
        let mut params = ModelParams::<f64>::zeros(dims);
        let mut grads = ModelParams::<f64>::zeros(dims);
        grads.tensor_mut(0)[0] = 2.0;
        let cfg = AdamConfig {
            lr: 1e-3,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(dims, cfg);
        let mut prev_value = 0.0;
        let mut prev_step = 0.0;
        for _ in 0..50 {
            adam_step(&mut params, &grads, &mut state).unwrap();
            let value = params.tensor(0)[0];
            let step = (prev_value - value).abs();
            assert!(step >= prev_step - 1e-15, "step size decreased");
            assert!(step <= cfg.lr + 1e-12);
            prev_step = step;
            prev_value = value;
        }
        assert!((prev_step - cfg.lr).abs() < 1e-5);
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let dims = tiny_dims();
        let mut params = ModelParams::<f64>::zeros(dims);
        let mut grads = ModelParams::<f64>::zeros(dims);
        grads.tensor_mut(2)[1] = f64::NAN;
        let mut state = AdamState::new(dims, AdamConfig::default());
        let err = adam_step(&mut params, &grads, &mut state).unwrap_err();
        match err {
            Error::Diverged { tensor, .. } => assert_eq!(tensor, TENSOR_NAMES[2]),
            other => panic!("expected divergence error, got {other}"),
        }
    }

    #[test]
    fn clip_rescales_only_above_threshold() {
        let dims = tiny_dims();
        let mut grads = ModelParams::<f64>::zeros(dims);
        grads.tensor_mut(0)[0] = 3.0;
        grads.tensor_mut(0)[1] = 4.0;
        let norm = clip_grad_norm(&mut grads, 10.0);
        assert!((norm - 5.0).abs() < 1e-12);
        assert_eq!(grads.tensor(0)[0], 3.0);
        let norm = clip_grad_norm(&mut grads, 1.0);
        assert!((norm - 5.0).abs() < 1e-12);
        assert!((grads.tensor(0)[0] - 0.6).abs() < 1e-12);
    }
}
