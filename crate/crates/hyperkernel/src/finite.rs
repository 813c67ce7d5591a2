//! Exact finite-width NTK-parameterized networks.
//!
//! Layer maps are y^l = W^l q^{l-1} / sqrt(n_{l-1}) with q^l = sqrt(2) *
//! relu(y^l) and no biases. The hypernetwork reshapes the meta output f(x)
//! into the primary weights {V^l} (layer-major, then row-major within each
//! V^l) and runs the same layer map on z. Gradients are closed-form
//! backward passes, validated against finite differences in the tests.

use crate::linalg::{dot, stream_rng, Matrix};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FiniteError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize },
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Weights of a fully connected ReLU MLP; `layers[l]` maps width
/// `widths[l]` to `widths[l+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    pub layers: Vec<Matrix>,
}

impl MlpWeights {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].cols()];
        w.extend(self.layers.iter().map(|m| m.rows()));
        w
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.depth() - 1].rows()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|m| m.rows() * m.cols()).sum()
    }
}

/// Standard-normal MLP weights, deterministic per seed; layer l draws from
/// substream l.
pub fn init_mlp(widths: &[usize], seed: u64) -> MlpWeights {
    assert!(widths.len() >= 2, "need at least one layer");
    assert!(widths.iter().all(|&w| w >= 1));
    let layers = (0..widths.len() - 1)
        .map(|l| {
            let mut m = Matrix::zeros(widths[l + 1], widths[l]);
            let mut rng = stream_rng(seed, l as u64);
            for v in m.entries_mut() {
                *v = rng.sample::<f64, _>(StandardNormal);
            }
            m
        })
        .collect();
    MlpWeights { layers }
}

/// Forward record of an MLP: `ys[l]` is the pre-activation y^{l+1},
/// `qs[l]` the scaled activation q^l with `qs[0] = x`. The output is the
/// last pre-activation (no nonlinearity on the final layer).
#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub ys: Vec<Vec<f64>>,
    pub qs: Vec<Vec<f64>>,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        self.ys.last().unwrap()
    }

    /// Smallest |pre-activation| over all hidden layers; a finite-difference
    /// oracle should reject inputs where this is tiny (kink proximity).
    pub fn min_abs_preact(&self) -> f64 {
        self.ys[..self.ys.len() - 1]
            .iter()
            .flat_map(|y| y.iter())
            .fold(f64::INFINITY, |m, &v| m.min(v.abs()))
    }
}

pub fn forward_mlp(w: &MlpWeights, x: &[f64]) -> Result<MlpTrace, FiniteError> {
    if x.len() != w.input_dim() {
        return Err(FiniteError::DimensionMismatch {
            expected: w.input_dim(),
            got: x.len(),
        });
    }
    let depth = w.depth();
    let mut ys = Vec::with_capacity(depth);
    let mut qs = Vec::with_capacity(depth);
    qs.push(x.to_vec());
    for l in 0..depth {
        let scale = 1.0 / (qs[l].len() as f64).sqrt();
        let mut y = w.layers[l].matvec(&qs[l]).unwrap();
        for v in y.iter_mut() {
            *v *= scale;
        }
        if l + 1 < depth {
            qs.push(y.iter().map(|&v| SQRT2 * v.max(0.0)).collect());
        }
        ys.push(y);
    }
    Ok(MlpTrace { ys, qs })
}

/// Backward pass: given dL/dy^L, returns `betas[l]` = dL/dy^{l+1} for
/// l = 0..L-1 (so `betas[L-1]` is the seed vector itself).
pub fn backprop_mlp(w: &MlpWeights, trace: &MlpTrace, out_grad: &[f64]) -> Vec<Vec<f64>> {
    let depth = w.depth();
    debug_assert_eq!(out_grad.len(), w.output_dim());
    let mut betas = vec![Vec::new(); depth];
    betas[depth - 1] = out_grad.to_vec();
    for l in (0..depth - 1).rev() {
        let mut b = w.layers[l + 1].matvec_transposed(&betas[l + 1]).unwrap();
        let scale = SQRT2 / (trace.qs[l + 1].len() as f64).sqrt();
        for (bi, &yi) in b.iter_mut().zip(&trace.ys[l]) {
            *bi = if yi > 0.0 { scale * *bi } else { 0.0 };
        }
        betas[l] = b;
    }
    betas
}

/// Per-layer gradients dW^l of the output coordinate `d`:
/// dW^l = beta^l (q^{l-1})^T / sqrt(n_{l-1}).
pub fn jacobian_mlp(w: &MlpWeights, x: &[f64], d: usize) -> Result<Vec<Matrix>, FiniteError> {
    let trace = forward_mlp(w, x)?;
    let mut e = vec![0.0; w.output_dim()];
    e[d] = 1.0;
    Ok(gradient_matrices(w, &trace, &e))
}

pub fn gradient_matrices(w: &MlpWeights, trace: &MlpTrace, out_grad: &[f64]) -> Vec<Matrix> {
    let betas = backprop_mlp(w, trace, out_grad);
    betas
        .iter()
        .zip(&trace.qs)
        .map(|(beta, q)| {
            let mut g = Matrix::zeros(beta.len(), q.len());
            g.add_outer(1.0 / (q.len() as f64).sqrt(), beta, q);
            g
        })
        .collect()
}

/// Finite hypernetwork: a meta MLP whose output is reshaped into the
/// primary network's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct HypernetWeights {
    pub meta: MlpWeights,
    pub primary_widths: Vec<usize>,
}

/// Total primary parameter count: sum of m_l * m_{l-1}.
pub fn primary_param_count(primary_widths: &[usize]) -> usize {
    (1..primary_widths.len())
        .map(|l| primary_widths[l] * primary_widths[l - 1])
        .sum()
}

impl HypernetWeights {
    pub fn primary_depth(&self) -> usize {
        self.primary_widths.len() - 1
    }
}

/// Standard-normal hypernetwork weights; `meta_widths` excludes the final
/// meta layer, whose output dimension is derived from `primary_widths`.
pub fn init_hypernet(
    meta_widths_hidden: &[usize],
    primary_widths: &[usize],
    seed: u64,
) -> HypernetWeights {
    assert!(primary_widths.len() >= 2, "primary needs at least one layer");
    let mut widths = meta_widths_hidden.to_vec();
    widths.push(primary_param_count(primary_widths));
    HypernetWeights {
        meta: init_mlp(&widths, seed),
        primary_widths: primary_widths.to_vec(),
    }
}

/// Splits a flat meta output v into the primary weight matrices V^l
/// (layer-major, row-major within each layer).
pub fn reshape_v(v: &[f64], primary_widths: &[usize]) -> Vec<Matrix> {
    debug_assert_eq!(v.len(), primary_param_count(primary_widths));
    let mut out = Vec::with_capacity(primary_widths.len() - 1);
    let mut off = 0;
    for l in 1..primary_widths.len() {
        let (rows, cols) = (primary_widths[l], primary_widths[l - 1]);
        out.push(Matrix::from_entries(rows, cols, v[off..off + rows * cols].to_vec()).unwrap());
        off += rows * cols;
    }
    out
}

/// Forward record of a hypernetwork evaluation: the meta trace, the
/// reshaped primary weights, and the primary trace.
#[derive(Debug, Clone)]
pub struct HyperTrace {
    pub meta: MlpTrace,
    pub vs: Vec<Matrix>,
    pub primary: MlpTrace,
}

impl HyperTrace {
    pub fn output(&self) -> &[f64] {
        self.primary.output()
    }
}

pub fn forward_hypernet(
    hw: &HypernetWeights,
    x: &[f64],
    z: &[f64],
) -> Result<HyperTrace, FiniteError> {
    if z.len() != hw.primary_widths[0] {
        return Err(FiniteError::DimensionMismatch {
            expected: hw.primary_widths[0],
            got: z.len(),
        });
    }
    let meta = forward_mlp(&hw.meta, x)?;
    let vs = reshape_v(meta.output(), &hw.primary_widths);
    let primary = forward_mlp(&MlpWeights { layers: vs.clone() }, z)?;
    Ok(HyperTrace { meta, vs, primary })
}

/// The gradient of output coordinate `d` with respect to the flat primary
/// weight vector v, in the same layout as `reshape_v`.
pub fn primary_weight_gradient(hw: &HypernetWeights, trace: &HyperTrace, d: usize) -> Vec<f64> {
    let pw = MlpWeights {
        layers: trace.vs.clone(),
    };
    let mut e = vec![0.0; pw.output_dim()];
    e[d] = 1.0;
    let grads = gradient_matrices(&pw, &trace.primary, &e);
    let mut gamma = Vec::with_capacity(primary_param_count(&hw.primary_widths));
    for g in &grads {
        gamma.extend_from_slice(g.entries());
    }
    gamma
}

/// Per-meta-layer gradients of the hypernetwork output h^d(u) with respect
/// to the trainable (meta) weights.
pub fn grad_hypernet(
    hw: &HypernetWeights,
    x: &[f64],
    z: &[f64],
    d: usize,
) -> Result<Vec<Matrix>, FiniteError> {
    let trace = forward_hypernet(hw, x, z)?;
    let gamma = primary_weight_gradient(hw, &trace, d);
    Ok(gradient_matrices(&hw.meta, &trace.meta, &gamma))
}

/// Empirical kernel summary between two inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalKernels {
    /// Hyperkernel K^h = <grad_w h(u), grad_w h(u')>.
    pub k_h: f64,
    /// Primary kernel K^g = <dh/dv(u), dh/dv(u')>.
    pub k_g: f64,
    /// Mean of sampled diagonal entries of the n_L x n_L meta kernel K^f.
    pub k_f_diag_mean: f64,
    /// RMS of sampled off-diagonal entries of K^f.
    pub k_f_offdiag_rms: f64,
}

/// Number of output indices probed when summarizing K^f.
const KF_PROBES: usize = 8;

pub fn empirical_kernels(
    hw: &HypernetWeights,
    u: (&[f64], &[f64]),
    u_prime: (&[f64], &[f64]),
) -> Result<EmpiricalKernels, FiniteError> {
    let t1 = forward_hypernet(hw, u.0, u.1)?;
    let t2 = forward_hypernet(hw, u_prime.0, u_prime.1)?;
    let gamma1 = primary_weight_gradient(hw, &t1, 0);
    let gamma2 = primary_weight_gradient(hw, &t2, 0);
    let k_g = dot(&gamma1, &gamma2);
    let b1 = backprop_mlp(&hw.meta, &t1.meta, &gamma1);
    let b2 = backprop_mlp(&hw.meta, &t2.meta, &gamma2);
    let k_h = rank_one_kernel(&t1.meta, &t2.meta, &b1, &b2);

    // K^f probe statistics over a fixed, order-independent index sample.
    let n_out = hw.meta.output_dim();
    let mut rng = stream_rng(0x6b66, 0);
    let mut idx: Vec<usize> = (0..KF_PROBES.min(n_out))
        .map(|_| rng.gen_range(0..n_out))
        .collect();
    idx.sort_unstable();
    idx.dedup();
    let probe = |t: &MlpTrace, d: usize| {
        let mut e = vec![0.0; n_out];
        e[d] = 1.0;
        backprop_mlp(&hw.meta, t, &e)
    };
    let rows1: Vec<_> = idx.iter().map(|&d| probe(&t1.meta, d)).collect();
    let rows2: Vec<_> = idx.iter().map(|&d| probe(&t2.meta, d)).collect();
    let mut diag_sum = 0.0;
    let mut off_sq = 0.0;
    let mut off_n = 0usize;
    for (i, r1) in rows1.iter().enumerate() {
        for (j, r2) in rows2.iter().enumerate() {
            let v = rank_one_kernel(&t1.meta, &t2.meta, r1, r2);
            if i == j {
                diag_sum += v;
            } else {
                off_sq += v * v;
                off_n += 1;
            }
        }
    }
    let k_f_diag_mean = diag_sum / idx.len() as f64;
    let k_f_offdiag_rms = if off_n == 0 {
        0.0
    } else {
        (off_sq / off_n as f64).sqrt()
    };
    Ok(EmpiricalKernels {
        k_h,
        k_g,
        k_f_diag_mean,
        k_f_offdiag_rms,
    })
}

/// Sum over layers of <q, q'> <beta, beta'> / n_{l-1}: the parameter-space
/// inner product of two rank-one per-layer gradients.
pub fn rank_one_kernel(
    t1: &MlpTrace,
    t2: &MlpTrace,
    betas1: &[Vec<f64>],
    betas2: &[Vec<f64>],
) -> f64 {
    t1.qs
        .iter()
        .zip(&t2.qs)
        .zip(betas1.iter().zip(betas2))
        .map(|((q1, q2), (b1, b2))| dot(q1, q2) * dot(b1, b2) / q1.len() as f64)
        .sum()
}

/// One supervised example for hypernetwork training.
#[derive(Debug, Clone)]
pub struct HyperSample {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub y: f64,
}

/// Plain SGD on the meta weights with loss |h - y|^p; each epoch visits
/// every example once in a fresh shuffled order, so batch = N is exact
/// full-batch gradient descent. Records the mean training loss once per
/// epoch (one epoch = ceil(N / batch) steps).
pub fn sgd_train(
    hw: &mut HypernetWeights,
    dataset: &[HyperSample],
    mu: f64,
    epochs: usize,
    batch: usize,
    p: u32,
    seed: u64,
) -> Result<Vec<f64>, FiniteError> {
    assert!(p == 1 || p == 2, "loss exponent must be 1 or 2");
    assert!(!dataset.is_empty() && batch >= 1);
    assert!(mu >= 0.0);
    let steps_per_epoch = dataset.len().div_ceil(batch);
    let mut rng = stream_rng(seed, 0);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut curve = Vec::with_capacity(epochs);
    let mut step = 0usize;
    for _ in 0..epochs {
        let mut epoch_loss = 0.0;
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let mut batch_loss = 0.0;
            let mut grads: Option<Vec<Matrix>> = None;
            for &idx in chunk {
                let s = &dataset[idx];
                let trace = forward_hypernet(hw, &s.x, &s.z)?;
                let h = trace.output()[0];
                let err = h - s.y;
                batch_loss += err.abs().powi(p as i32);
                let dl = match p {
                    1 => err.signum(),
                    _ => 2.0 * err,
                };
                let gamma = primary_weight_gradient(hw, &trace, 0);
                let g = gradient_matrices(&hw.meta, &trace.meta, &gamma);
                match &mut grads {
                    None => {
                        let mut g = g;
                        for m in &mut g {
                            for v in m.entries_mut() {
                                *v *= dl;
                            }
                        }
                        grads = Some(g);
                    }
                    Some(acc) => {
                        for (a, gi) in acc.iter_mut().zip(&g) {
                            for (av, &gv) in a.entries_mut().iter_mut().zip(gi.entries()) {
                                *av += dl * gv;
                            }
                        }
                    }
                }
            }
            batch_loss /= chunk.len() as f64;
            if !batch_loss.is_finite() {
                return Err(FiniteError::NonFiniteLoss { step });
            }
            if mu > 0.0 {
                let scale = mu / chunk.len() as f64;
                for (w, g) in hw.meta.layers.iter_mut().zip(grads.as_ref().unwrap()) {
                    for (wv, &gv) in w.entries_mut().iter_mut().zip(g.entries()) {
                        *wv -= scale * gv;
                    }
                }
            }
            epoch_loss += batch_loss;
            step += 1;
        }
        curve.push(epoch_loss / steps_per_epoch as f64);
    }
    Ok(curve)
}

/// One supervised example for plain MLP training.
#[derive(Debug, Clone)]
pub struct MlpSample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// SGD on a scalar-output MLP with loss |f - y|^p; same shuffled-epoch
/// conventions as `sgd_train`. Returns the per-epoch mean training loss.
pub fn sgd_train_mlp(
    w: &mut MlpWeights,
    dataset: &[MlpSample],
    mu: f64,
    epochs: usize,
    batch: usize,
    p: u32,
    seed: u64,
) -> Result<Vec<f64>, FiniteError> {
    assert!(p == 1 || p == 2, "loss exponent must be 1 or 2");
    assert!(!dataset.is_empty() && batch >= 1);
    let steps_per_epoch = dataset.len().div_ceil(batch);
    let mut rng = stream_rng(seed, 0);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut curve = Vec::with_capacity(epochs);
    let mut step = 0usize;
    for _ in 0..epochs {
        let mut epoch_loss = 0.0;
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let mut batch_loss = 0.0;
            let mut grads: Option<Vec<Matrix>> = None;
            for &idx in chunk {
                let s = &dataset[idx];
                let trace = forward_mlp(w, &s.x)?;
                let f = trace.output()[0];
                let err = f - s.y;
                batch_loss += err.abs().powi(p as i32);
                let dl = match p {
                    1 => err.signum(),
                    _ => 2.0 * err,
                };
                let g = gradient_matrices(w, &trace, &[1.0]);
                match &mut grads {
                    None => {
                        let mut g = g;
                        for m in &mut g {
                            for v in m.entries_mut() {
                                *v *= dl;
                            }
                        }
                        grads = Some(g);
                    }
                    Some(acc) => {
                        for (a, gi) in acc.iter_mut().zip(&g) {
                            for (av, &gv) in a.entries_mut().iter_mut().zip(gi.entries()) {
                                *av += dl * gv;
                            }
                        }
                    }
                }
            }
            batch_loss /= chunk.len() as f64;
            if !batch_loss.is_finite() {
                return Err(FiniteError::NonFiniteLoss { step });
            }
            if mu > 0.0 {
                let scale = mu / chunk.len() as f64;
                for (wl, g) in w.layers.iter_mut().zip(grads.as_ref().unwrap()) {
                    for (wv, &gv) in wl.entries_mut().iter_mut().zip(g.entries()) {
                        *wv -= scale * gv;
                    }
                }
            }
            epoch_loss += batch_loss;
            step += 1;
        }
        curve.push(epoch_loss / steps_per_epoch as f64);
    }
    Ok(curve)
}
