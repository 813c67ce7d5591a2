//! Higher-order correlation terms and scaling-exponent probes.
//!
//! `corr_term` evaluates the contraction T of a k-th mixed derivative
//! tensor of one network output with an outer product of k gradients,
//! without ever materializing the rank-(2k-1) tensor: every factor reduces
//! to inner products of forward activations and backward (backprop)
//! vectors. `higher_derivative_oracle` builds the dense derivative tensor
//! on tiny networks as an independent cross-check. `hyper_order_term`
//! assembles the hypernetwork order term K^(r) = <grad^r h_i, (grad h_j)^r>
//! from these pieces, and the scaling probes fit log-log slopes of |T| and
//! |K^(r)| against width.

use crate::finite::{
    backprop_mlp, forward_hypernet, forward_mlp, init_hypernet, init_mlp, FiniteError,
    HypernetWeights, MlpTrace, MlpWeights,
};
use crate::linalg::{dot, stream_rng, Matrix};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Error, PartialEq)]
pub enum CorrError {
    #[error("invalid multi-index: {reason}")]
    InvalidIndex { reason: String },
    #[error("dense tensor too large: {params} selected parameters exceed the cap of {cap}")]
    TooLarge { params: usize, cap: usize },
    #[error("pre-activation within {limit:e} of a ReLU kink")]
    KinkProximity { limit: f64 },
    #[error("unsupported shape: {reason}")]
    UnsupportedShape { reason: String },
    #[error(transparent)]
    Finite(#[from] FiniteError),
}

/// The (layers, examples, outputs) triple selecting one correlation term.
/// Layers live in 1..=L; a repeated layer gives a zero derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndex {
    pub layers: Vec<usize>,
    pub examples: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl MultiIndex {
    pub fn order(&self) -> usize {
        self.layers.len()
    }

    fn validate(&self, depth: usize, n_examples: usize, n_out: usize) -> Result<(), CorrError> {
        let k = self.order();
        if k == 0 || self.examples.len() != k || self.outputs.len() != k {
            return Err(CorrError::InvalidIndex {
                reason: format!(
                    "lengths must match and be positive: {} layers, {} examples, {} outputs",
                    k,
                    self.examples.len(),
                    self.outputs.len()
                ),
            });
        }
        if let Some(&l) = self.layers.iter().find(|&&l| l < 1 || l > depth) {
            return Err(CorrError::InvalidIndex {
                reason: format!("layer {l} outside 1..={depth}"),
            });
        }
        if let Some(&i) = self.examples.iter().find(|&&i| i >= n_examples) {
            return Err(CorrError::InvalidIndex {
                reason: format!("example {i} outside 0..{n_examples}"),
            });
        }
        if let Some(&d) = self.outputs.iter().find(|&&d| d >= n_out) {
            return Err(CorrError::InvalidIndex {
                reason: format!("output {d} outside 0..{n_out}"),
            });
        }
        Ok(())
    }

    /// Entries jointly sorted by layer (the mixed derivative is symmetric
    /// in differentiation order).
    fn sorted(&self) -> MultiIndex {
        let mut order: Vec<usize> = (0..self.order()).collect();
        order.sort_by_key(|&t| self.layers[t]);
        MultiIndex {
            layers: order.iter().map(|&t| self.layers[t]).collect(),
            examples: order.iter().map(|&t| self.examples[t]).collect(),
            outputs: order.iter().map(|&t| self.outputs[t]).collect(),
        }
    }
}

/// Pulls a vector in y^v-space of `trace` back to y^u-space: applies the
/// transpose of the backward product P^{u->v}.
fn pull_back(w: &MlpWeights, trace: &MlpTrace, mut v: Vec<f64>, from: usize, to: usize) -> Vec<f64> {
    debug_assert!(to <= from);
    for l in (to + 1..=from).rev() {
        let mut next = w.layers[l - 1].matvec_transposed(&v).unwrap();
        let n_prev = next.len() as f64;
        let scale = (2.0 / n_prev).sqrt();
        for (nv, &y) in next.iter_mut().zip(&trace.ys[l - 2]) {
            *nv = if y > 0.0 { scale * *nv } else { 0.0 };
        }
        v = next;
    }
    v
}

/// sqrt(2) Z^l(trace_sign) applied elementwise to q^l(trace_q): the
/// activation of one input gated by the sign pattern of another.
fn gated_activation(trace_sign: &MlpTrace, trace_q: &MlpTrace, l: usize) -> Vec<f64> {
    trace_sign.ys[l - 1]
        .iter()
        .zip(&trace_q.qs[l])
        .map(|(&y, &q)| if y > 0.0 { SQRT2 * q } else { 0.0 })
        .collect()
}

/// The correlation term T for derivative base point `x0` (output `out`)
/// against gradients of outputs `idx.outputs` at `xs[idx.examples]`.
pub fn corr_term(
    w: &MlpWeights,
    x0: &[f64],
    xs: &[Vec<f64>],
    out: usize,
    idx: &MultiIndex,
) -> Result<f64, CorrError> {
    let depth = w.depth();
    let n_out = w.output_dim();
    idx.validate(depth, xs.len(), n_out)?;
    if out >= n_out {
        return Err(CorrError::InvalidIndex {
            reason: format!("base output {out} outside 0..{n_out}"),
        });
    }
    let idx = idx.sorted();
    let k = idx.order();
    if idx.layers.windows(2).any(|p| p[0] == p[1]) {
        return Ok(0.0);
    }

    let trace0 = forward_mlp(w, x0)?;
    let mut traces: Vec<Option<MlpTrace>> = vec![None; xs.len()];
    for &i in &idx.examples {
        if traces[i].is_none() {
            traces[i] = Some(forward_mlp(w, &xs[i])?);
        }
    }
    let trace = |i: usize| traces[i].as_ref().unwrap();
    // Backprop rows: row d of P^{l->L}(x) for every (example, output) used.
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut row_key: Vec<(usize, usize)> = Vec::new();
    fn row_for(
        rows: &mut Vec<Vec<Vec<f64>>>,
        row_key: &mut Vec<(usize, usize)>,
        w: &MlpWeights,
        n_out: usize,
        i: usize,
        d: usize,
        tr: &MlpTrace,
    ) -> usize {
        if let Some(pos) = row_key.iter().position(|&kd| kd == (i, d)) {
            return pos;
        }
        let mut e = vec![0.0; n_out];
        e[d] = 1.0;
        rows.push(backprop_mlp(w, tr, &e));
        row_key.push((i, d));
        rows.len() - 1
    }

    let l1 = idx.layers[0];
    let i1 = idx.examples[0];
    let q0 = &trace0.qs[l1 - 1];
    let mut t = dot(q0, &trace(i1).qs[l1 - 1]) / q0.len() as f64;

    for j in 0..k - 1 {
        let (lj, lj1) = (idx.layers[j], idx.layers[j + 1]);
        let (ij, ij1, dj) = (idx.examples[j], idx.examples[j + 1], idx.outputs[j]);
        let gated = gated_activation(&trace0, trace(ij1), lj1 - 1);
        let n_mid = gated.len() as f64;
        let v = pull_back(w, &trace0, gated, lj1 - 1, lj);
        let pos = row_for(&mut rows, &mut row_key, w, n_out, ij, dj, trace(ij));
        t *= dot(&rows[pos][lj - 1], &v) / n_mid;
    }

    let lk = idx.layers[k - 1];
    let (ik, dk) = (idx.examples[k - 1], idx.outputs[k - 1]);
    let pos_k = row_for(&mut rows, &mut row_key, w, n_out, ik, dk, trace(ik));
    let end_other = rows[pos_k][lk - 1].clone();
    let mut e0 = vec![0.0; n_out];
    e0[out] = 1.0;
    let rows0 = backprop_mlp(w, &trace0, &e0);
    t *= dot(&rows0[lk - 1], &end_other);
    Ok(t)
}

/// Dense k-th mixed derivative tensor of output `out` at `x0` with respect
/// to the selected layers' weights, on tiny networks only.
///
/// With the activation pattern frozen at the forward trace, the network is
/// multilinear in the selected layers' weights and every tensor entry is an
/// explicit product of fixed matrix entries.
#[derive(Debug, Clone)]
pub struct DenseDerivative {
    /// (rows, cols) of each selected layer, in the order requested.
    pub dims: Vec<(usize, usize)>,
    /// Entries in mixed-radix order: index (a1,b1,...,ak,bk), a/b pairs
    /// fastest-varying last.
    pub entries: Vec<f64>,
}

impl DenseDerivative {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Contracts the tensor with one matrix per selected layer.
    pub fn contract(&self, factors: &[Matrix]) -> f64 {
        assert_eq!(factors.len(), self.dims.len());
        let mut total = 0.0;
        let mut counters = vec![(0usize, 0usize); self.dims.len()];
        for &entry in &self.entries {
            if entry != 0.0 {
                let mut prod = entry;
                for (f, &(a, b)) in factors.iter().zip(&counters) {
                    prod *= f.get(a, b);
                }
                total += prod;
            }
            // Mixed-radix increment over (a, b) pairs, last pair fastest.
            for pos in (0..counters.len()).rev() {
                let (rows, cols) = self.dims[pos];
                counters[pos].1 += 1;
                if counters[pos].1 == cols {
                    counters[pos].1 = 0;
                    counters[pos].0 += 1;
                    if counters[pos].0 == rows {
                        counters[pos].0 = 0;
                        continue;
                    }
                }
                break;
            }
        }
        total
    }
}

/// Parameter cap for the dense oracle.
pub const ORACLE_PARAM_CAP: usize = 200;
const KINK_LIMIT: f64 = 1e-6;

pub fn higher_derivative_oracle(
    w: &MlpWeights,
    x0: &[f64],
    layers: &[usize],
    out: usize,
) -> Result<DenseDerivative, CorrError> {
    let depth = w.depth();
    if layers.is_empty() || layers.iter().any(|&l| l < 1 || l > depth) {
        return Err(CorrError::InvalidIndex {
            reason: format!("layers {layers:?} outside 1..={depth}"),
        });
    }
    let widths = w.widths();
    let dims: Vec<(usize, usize)> = layers.iter().map(|&l| (widths[l], widths[l - 1])).collect();
    let params: usize = dims.iter().map(|&(r, c)| r * c).sum();
    if params > ORACLE_PARAM_CAP {
        return Err(CorrError::TooLarge {
            params,
            cap: ORACLE_PARAM_CAP,
        });
    }
    let total: usize = dims.iter().map(|&(r, c)| r * c).product();
    let trace = forward_mlp(w, x0)?;
    if trace.min_abs_preact() < KINK_LIMIT {
        return Err(CorrError::KinkProximity { limit: KINK_LIMIT });
    }

    let mut sorted = layers.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|p| p[0] == p[1]) {
        return Ok(DenseDerivative {
            dims,
            entries: vec![0.0; total],
        });
    }
    // Work in sorted layer order, then permute indices on write-out.
    let perm: Vec<usize> = {
        let mut order: Vec<usize> = (0..layers.len()).collect();
        order.sort_by_key(|&t| layers[t]);
        order
    };
    let k = sorted.len();

    // B_j = sqrt(2) Z^{l_{j+1}-1} P^{l_j -> l_{j+1}-1} (x0), dense.
    let bridge: Vec<Matrix> = (0..k - 1)
        .map(|j| dense_bridge(w, &trace, sorted[j], sorted[j + 1]))
        .collect();
    let mut e0 = vec![0.0; w.output_dim()];
    e0[out] = 1.0;
    let rows0 = backprop_mlp(w, &trace, &e0);
    let end_row = &rows0[sorted[k - 1] - 1];
    let u0: Vec<f64> = {
        let q = &trace.qs[sorted[0] - 1];
        let s = 1.0 / (q.len() as f64).sqrt();
        q.iter().map(|&v| s * v).collect()
    };
    let mid_scale: Vec<f64> = (0..k - 1)
        .map(|j| 1.0 / (widths[sorted[j + 1] - 1] as f64).sqrt())
        .collect();

    let sorted_dims: Vec<(usize, usize)> = sorted.iter().map(|&l| (widths[l], widths[l - 1])).collect();
    let mut entries = vec![0.0; total];
    let mut counters = vec![(0usize, 0usize); k];
    for _ in 0..total {
        // counters[t] indexes the t-th layer in sorted order.
        let mut v = u0[counters[0].1] * end_row[counters[k - 1].0];
        for j in 0..k - 1 {
            v *= mid_scale[j] * bridge[j].get(counters[j + 1].1, counters[j].0);
        }
        entries[reorder_flat(&counters, &perm, &dims)] = v;
        // Increment mixed-radix counters over sorted dims.
        for pos in (0..k).rev() {
            let (rows, cols) = sorted_dims[pos];
            counters[pos].1 += 1;
            if counters[pos].1 == cols {
                counters[pos].1 = 0;
                counters[pos].0 += 1;
                if counters[pos].0 == rows {
                    counters[pos].0 = 0;
                    continue;
                }
            }
            break;
        }
    }
    Ok(DenseDerivative { dims, entries })
}

/// Maps counters over sorted layer slots to the flat index of the caller's
/// original layer ordering.
fn reorder_flat(counters: &[(usize, usize)], perm: &[usize], dims: &[(usize, usize)]) -> usize {
    // perm[t] = original position of the t-th sorted layer; invert it.
    let k = perm.len();
    let mut at_orig = vec![(0usize, 0usize); k];
    for (t, &orig) in perm.iter().enumerate() {
        at_orig[orig] = counters[t];
    }
    let mut flat = 0usize;
    for (pos, &(rows, cols)) in dims.iter().enumerate() {
        flat = flat * rows * cols + at_orig[pos].0 * cols + at_orig[pos].1;
    }
    flat
}

/// Dense sqrt(2) Z^{hi-1} P^{lo -> hi-1}(x0), shape n_{hi-1} x n_lo.
fn dense_bridge(w: &MlpWeights, trace: &MlpTrace, lo: usize, hi: usize) -> Matrix {
    let widths = w.widths();
    let n_lo = widths[lo];
    // Start from the identity in y^{lo}-space and push forward.
    let mut p = Matrix::from_entries(
        n_lo,
        n_lo,
        (0..n_lo * n_lo)
            .map(|i| if i % (n_lo + 1) == 0 { 1.0 } else { 0.0 })
            .collect(),
    )
    .unwrap();
    for l in lo..hi - 1 {
        // Apply sqrt(2/n_l) W^{l+1} Z^l to the left.
        let mut gated = p.clone();
        let scale = (2.0 / widths[l] as f64).sqrt();
        for r in 0..gated.rows() {
            let on = trace.ys[l - 1][r] > 0.0;
            for c in 0..gated.cols() {
                let v = if on { scale * gated.get(r, c) } else { 0.0 };
                gated.set(r, c, v);
            }
        }
        p = w.layers[l].matmul(&gated).unwrap();
    }
    // Final sqrt(2) Z^{hi-1} gate.
    let mut out = p;
    for r in 0..out.rows() {
        let on = trace.ys[hi - 2][r] > 0.0;
        for c in 0..out.cols() {
            let v = if on { SQRT2 * out.get(r, c) } else { 0.0 };
            out.set(r, c, v);
        }
    }
    out
}

/// The hypernetwork order term K^(r)_{i,j} = <grad^r h_i, (grad h_j)^r>,
/// assembled per the product-rule decomposition with all-width-one primary
/// networks.
pub fn hyper_order_term(
    hw: &HypernetWeights,
    u_i: (&[f64], &[f64]),
    u_j: (&[f64], &[f64]),
    r: usize,
) -> Result<f64, CorrError> {
    let h_depth = hw.primary_depth();
    if hw.primary_widths.iter().any(|&m| m != 1) {
        return Err(CorrError::UnsupportedShape {
            reason: "all primary widths must be 1".into(),
        });
    }
    if r == 0 || r > 4 || h_depth > 3 {
        return Err(CorrError::UnsupportedShape {
            reason: format!("need 1 <= r <= 4 and H <= 3, got r={r}, H={h_depth}"),
        });
    }
    let meta_depth = hw.meta.depth();
    let n_out = hw.meta.output_dim();
    debug_assert_eq!(n_out, h_depth);

    let ti = forward_hypernet(hw, u_i.0, u_i.1)?;
    let tj = forward_hypernet(hw, u_j.0, u_j.1)?;
    let f_i = ti.meta.output().to_vec();
    let f_j = tj.meta.output().to_vec();
    // sqrt(2) sign products over the hidden primary layers.
    let act_prod = |t: &crate::finite::HyperTrace| -> f64 {
        (1..h_depth)
            .map(|d| if t.primary.ys[d - 1][0] > 0.0 { SQRT2 } else { 0.0 })
            .product()
    };
    let prefactor = u_i.1[0] * act_prod(&ti);
    // h^e_j = dh_j / df^e with frozen signs.
    let sign_j = act_prod(&tj);
    let h_j: Vec<f64> = (0..h_depth)
        .map(|e| {
            let others: f64 = (0..h_depth).filter(|&t| t != e).map(|t| f_j[t]).product();
            u_j.1[0] * others * sign_j
        })
        .collect();

    // Factor tables over the meta network: base point x_i, gradients at x_j.
    let trace_i = &ti.meta;
    let trace_j = &tj.meta;
    // A[l] for l in 1..=L (index 0 unused).
    let mut a_tab = vec![0.0; meta_depth + 1];
    for l in 1..=meta_depth {
        let q = &trace_i.qs[l - 1];
        a_tab[l] = dot(q, &trace_j.qs[l - 1]) / q.len() as f64;
    }
    // Backprop rows of x_j for every output, and of x_i for every output.
    let rows_j: Vec<Vec<Vec<f64>>> = (0..n_out)
        .map(|d| {
            let mut e = vec![0.0; n_out];
            e[d] = 1.0;
            backprop_mlp(&hw.meta, trace_j, &e)
        })
        .collect();
    let rows_i: Vec<Vec<Vec<f64>>> = (0..n_out)
        .map(|d| {
            let mut e = vec![0.0; n_out];
            e[d] = 1.0;
            backprop_mlp(&hw.meta, trace_i, &e)
        })
        .collect();
    // E-tilde[l][d] = sum_e h^e_j <row d of P^{l->L}(x_i), row e of P^{l->L}(x_j)>.
    let mut e_tab = vec![vec![0.0; n_out]; meta_depth + 1];
    for l in 1..=meta_depth {
        for d in 0..n_out {
            e_tab[l][d] = (0..n_out)
                .map(|e| h_j[e] * dot(&rows_i[d][l - 1], &rows_j[e][l - 1]))
                .sum();
        }
    }
    // M-tilde[la][lb] = sum_e h^e_j M(la, lb, e) for la < lb.
    let mut m_tab = vec![vec![0.0; meta_depth + 1]; meta_depth + 1];
    for lb in 2..=meta_depth {
        let gated = gated_activation(trace_i, trace_j, lb - 1);
        let n_mid = gated.len() as f64;
        let mut v = gated;
        let mut la = lb - 1;
        loop {
            m_tab[la][lb] = (0..n_out)
                .map(|e| h_j[e] * dot(&rows_j[e][la - 1], &v))
                .sum::<f64>()
                / n_mid;
            if la == 1 {
                break;
            }
            v = pull_back(&hw.meta, trace_i, v, la, la - 1);
            la -= 1;
        }
    }

    // Phi_d(a) = a! * sum over increasing layer tuples of
    // A[l1] M~[l1][l2] ... M~[l_{a-1}][l_a] E~[l_a][d].
    let phi = |d: usize, a: usize| -> f64 {
        if a == 0 {
            return f_i[d];
        }
        let mut total = 0.0;
        let mut tuple: Vec<usize> = (1..=a).collect();
        if a > meta_depth {
            return 0.0;
        }
        loop {
            let mut v = a_tab[tuple[0]];
            for t in 0..a - 1 {
                v *= m_tab[tuple[t]][tuple[t + 1]];
            }
            v *= e_tab[tuple[a - 1]][d];
            total += v;
            // Next strictly increasing tuple in 1..=meta_depth.
            let mut pos = a;
            loop {
                if pos == 0 {
                    return total * factorial(a);
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] <= meta_depth - (a - 1 - pos) {
                    for t in pos + 1..a {
                        tuple[t] = tuple[t - 1] + 1;
                    }
                    break;
                }
            }
        }
    };

    // Multinomial sum over compositions of r into H nonnegative parts.
    let mut total = 0.0;
    let mut alpha = vec![0usize; h_depth];
    compositions(r, h_depth, &mut alpha, 0, &mut |alpha| {
        let coeff = factorial(r) / alpha.iter().map(|&a| factorial(a)).product::<f64>();
        let prod: f64 = (0..h_depth).map(|d| phi(d, alpha[d])).product();
        total += coeff * prod;
    });
    Ok(prefactor * total)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

fn compositions(rem: usize, slots: usize, alpha: &mut Vec<usize>, pos: usize, f: &mut impl FnMut(&[usize])) {
    if pos == slots - 1 {
        alpha[pos] = rem;
        f(alpha);
        return;
    }
    for v in 0..=rem {
        alpha[pos] = v;
        compositions(rem - v, slots, alpha, pos + 1, f);
    }
}

/// Least-squares fit of y = slope * x + intercept with r^2 and an
/// approximate 95% confidence interval for the slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> SlopeFit {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let syy: f64 = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let e = y - slope * x - intercept;
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let df = (xs.len() as f64 - 2.0).max(1.0);
    let se = (ss_res / df / sxx).sqrt();
    SlopeFit {
        slope,
        intercept,
        r2,
        ci_low: slope - 2.0 * se,
        ci_high: slope + 2.0 * se,
    }
}

/// One raw probe evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ScalingRow {
    pub width: usize,
    pub seed: u64,
    pub value: f64,
}

/// Per-width aggregate of |value|.
#[derive(Debug, Clone, Copy)]
pub struct ScalingAggregate {
    pub width: usize,
    pub mean_abs: f64,
    pub sd: f64,
    pub median_abs: f64,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct ScalingSummary {
    pub rows: Vec<ScalingRow>,
    pub aggregates: Vec<ScalingAggregate>,
    /// Slope of log mean|value| against log width.
    pub mean_fit: SlopeFit,
    /// Slope of log median|value| against log width.
    pub median_fit: SlopeFit,
}

fn summarize(rows: Vec<ScalingRow>, widths: &[usize]) -> ScalingSummary {
    let mut aggregates = Vec::with_capacity(widths.len());
    for &w in widths {
        let mut vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.width == w)
            .map(|r| r.value.abs())
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = vals.len();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        let median = if n % 2 == 1 {
            vals[n / 2]
        } else {
            0.5 * (vals[n / 2 - 1] + vals[n / 2])
        };
        aggregates.push(ScalingAggregate {
            width: w,
            mean_abs: mean,
            sd,
            median_abs: median,
            n,
        });
    }
    let xs: Vec<f64> = aggregates.iter().map(|a| (a.width as f64).ln()).collect();
    let ym: Vec<f64> = aggregates.iter().map(|a| a.mean_abs.ln()).collect();
    let yd: Vec<f64> = aggregates.iter().map(|a| a.median_abs.ln()).collect();
    let mean_fit = fit_loglog(&xs, &ym);
    let median_fit = fit_loglog(&xs, &yd);
    ScalingSummary {
        rows,
        aggregates,
        mean_fit,
        median_fit,
    }
}

/// Configuration of a T^r scaling probe.
#[derive(Debug, Clone)]
pub struct TProbeConfig {
    pub r: usize,
    pub depth: usize,
    pub n0: usize,
    pub widths: Vec<usize>,
    pub seeds: usize,
    pub base_seed: u64,
    /// Matched outputs (all gradient outputs equal the base output) follow
    /// the n^{1-r} law; mismatched outputs decay one order faster.
    pub matched: bool,
}

/// Samples random multi-indexes and inputs per seed and fits the slope of
/// log |T^r| against log width.
pub fn scaling_probe_t(cfg: &TProbeConfig) -> ScalingSummary {
    assert!(cfg.r >= 1 && cfg.r <= cfg.depth);
    let n_out = if cfg.matched { 1 } else { 2 };
    let mut rows = Vec::with_capacity(cfg.widths.len() * cfg.seeds);
    for &width in &cfg.widths {
        for s in 0..cfg.seeds {
            let seed = cfg
                .base_seed
                .wrapping_mul(1_000_003)
                .wrapping_add((width as u64) << 20)
                .wrapping_add(s as u64);
            let mut widths_vec = vec![cfg.n0];
            widths_vec.extend(std::iter::repeat(width).take(cfg.depth - 1));
            widths_vec.push(n_out);
            let w = init_mlp(&widths_vec, seed);
            let mut rng = stream_rng(seed, 999);
            let sample_x = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
                (0..cfg.n0).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            };
            let x0 = sample_x(&mut rng);
            let xs: Vec<Vec<f64>> = (0..cfg.r).map(|_| sample_x(&mut rng)).collect();
            let mut layer_pool: Vec<usize> = (1..=cfg.depth).collect();
            layer_pool.shuffle(&mut rng);
            let mut layers: Vec<usize> = layer_pool[..cfg.r].to_vec();
            layers.sort_unstable();
            let outputs: Vec<usize> = if cfg.matched {
                vec![0; cfg.r]
            } else {
                // Force at least one mismatch against base output 0.
                let mut o: Vec<usize> = (0..cfg.r).map(|_| rng.gen_range(0..n_out)).collect();
                o[0] = 1;
                o
            };
            let idx = MultiIndex {
                layers,
                examples: (0..cfg.r).collect(),
                outputs,
            };
            let value = corr_term(&w, &x0, &xs, 0, &idx).unwrap();
            rows.push(ScalingRow {
                width,
                seed: s as u64,
                value,
            });
        }
    }
    summarize(rows, &cfg.widths)
}

/// Configuration of a K^(r) scaling probe.
#[derive(Debug, Clone)]
pub struct KProbeConfig {
    pub r: usize,
    pub primary_depth: usize,
    pub meta_depth: usize,
    pub n0: usize,
    pub widths: Vec<usize>,
    pub seeds: usize,
    pub base_seed: u64,
}

/// Fits the slope of log |K^(r)| against log meta width with a
/// width-one primary network.
pub fn scaling_probe_k(cfg: &KProbeConfig) -> ScalingSummary {
    assert!(cfg.meta_depth >= 2);
    let primary_widths = vec![1usize; cfg.primary_depth + 1];
    let mut rows = Vec::with_capacity(cfg.widths.len() * cfg.seeds);
    for &width in &cfg.widths {
        for s in 0..cfg.seeds {
            let seed = cfg
                .base_seed
                .wrapping_mul(1_000_033)
                .wrapping_add((width as u64) << 20)
                .wrapping_add(s as u64);
            let mut meta_widths = vec![cfg.n0];
            meta_widths.extend(std::iter::repeat(width).take(cfg.meta_depth - 1));
            let hw = init_hypernet(&meta_widths, &primary_widths, seed);
            let mut rng = stream_rng(seed, 999);
            let x_i: Vec<f64> = (0..cfg.n0).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let x_j: Vec<f64> = (0..cfg.n0).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let z_i = [rng.gen_range(0.5..1.5)];
            let z_j = [rng.gen_range(0.5..1.5)];
            let value = hyper_order_term(&hw, (&x_i, &z_i), (&x_j, &z_j), cfg.r).unwrap();
            rows.push(ScalingRow {
                width,
                seed: s as u64,
                value,
            });
        }
    }
    summarize(rows, &cfg.widths)
}
