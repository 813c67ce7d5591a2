//! Desk-scale experiments: Monte Carlo convergence of the empirical
//! hyperkernel to its analytic limit, kernel drift under SGD, kernel
//! regression on pixel tasks with finite-network baselines, and stability
//! of training at width-scaled learning rates.

use crate::data::{build_task, DataError, FourierSpec, ImageSet, TaskMode};
use crate::finite::{
    backprop_mlp, empirical_kernels, forward_mlp, gradient_matrices, init_hypernet, init_mlp,
    primary_param_count, rank_one_kernel, reshape_v, sgd_train, sgd_train_mlp, FiniteError,
    HyperSample, MlpSample, MlpWeights,
};
use crate::kernels::{HyperKernelConfig, KernelError};
use crate::linalg::{dot, stream_rng, LinalgError};
use crate::regression::{fit_predict, mse, CachedHyperKernel, HyperKernelKind, HyperPoint};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::SQRT_2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Finite(#[from] FiniteError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Median of a nonempty slice.
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty());
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn normalized_gaussian(dim: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    let mut x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let scale = (dim as f64).sqrt() / crate::linalg::norm(&x);
    for v in x.iter_mut() {
        *v *= scale;
    }
    x
}

/// Empirical hyperkernels K^h((x, zs[0]), (x, zs[c])) for one weight draw,
/// without materializing the final meta layer in f64: its rows are drawn
/// once, cached as f32, and reused for the transposed gradient pass. The
/// draw order matches `init_hypernet` with the same seed, so at small
/// widths this agrees with `empirical_kernels` on the full network.
pub fn streamed_hyper_kernels(
    n0: usize,
    meta_hidden: &[usize],
    primary_widths: &[usize],
    x: &[f64],
    zs: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<f64>, FiniteError> {
    assert!(!meta_hidden.is_empty());
    assert_eq!(*primary_widths.last().unwrap(), 1);
    assert!(!zs.is_empty());
    let mut small_widths = vec![n0];
    small_widths.extend_from_slice(meta_hidden);
    let small = init_mlp(&small_widths, seed);
    let trace = forward_mlp(&small, x)?;
    let y_last = trace.output().to_vec();
    let q_last: Vec<f64> = y_last.iter().map(|&v| SQRT_2 * v.max(0.0)).collect();
    let wf = q_last.len();
    let n_l = primary_param_count(primary_widths);

    // Final meta layer: v = W^L q^{L-1} / sqrt(wf), rows cached as f32.
    let mut rng = stream_rng(seed, small.depth() as u64);
    let mut w_last = Vec::with_capacity(n_l * wf);
    let mut v = Vec::with_capacity(n_l);
    let inv_sqrt_wf = 1.0 / (wf as f64).sqrt();
    for _ in 0..n_l {
        let mut s = 0.0;
        for &q in &q_last {
            let g: f64 = rng.sample(StandardNormal);
            w_last.push(g as f32);
            s += g * q;
        }
        v.push(s * inv_sqrt_wf);
    }

    let pw = MlpWeights {
        layers: reshape_v(&v, primary_widths),
    };
    let gammas: Vec<Vec<f64>> = zs
        .iter()
        .map(|z| {
            let tr = forward_mlp(&pw, z)?;
            let mut gamma = Vec::with_capacity(n_l);
            for g in gradient_matrices(&pw, &tr, &[1.0]) {
                gamma.extend_from_slice(g.entries());
            }
            Ok(gamma)
        })
        .collect::<Result<_, FiniteError>>()?;

    // W^L^T gamma for every probe in one pass over the cached rows.
    let mut acc = vec![vec![0.0f64; wf]; zs.len()];
    for r in 0..n_l {
        let row = &w_last[r * wf..(r + 1) * wf];
        for (a, gamma) in acc.iter_mut().zip(&gammas) {
            let gv = gamma[r];
            if gv != 0.0 {
                for (av, &wv) in a.iter_mut().zip(row) {
                    *av += gv * wv as f64;
                }
            }
        }
    }
    let betas: Vec<Vec<Vec<f64>>> = acc
        .iter()
        .map(|a| {
            let seed_vec: Vec<f64> = a
                .iter()
                .zip(&y_last)
                .map(|(&av, &y)| if y > 0.0 { SQRT_2 * av * inv_sqrt_wf } else { 0.0 })
                .collect();
            backprop_mlp(&small, &trace, &seed_vec)
        })
        .collect();

    let qq = dot(&q_last, &q_last);
    Ok((0..zs.len())
        .map(|c| {
            rank_one_kernel(&trace, &trace, &betas[0], &betas[c])
                + qq * dot(&gammas[0], &gammas[c]) / wf as f64
        })
        .collect())
}

/// Grid for the kernel-convergence experiment: one fixed normalized meta
/// input x, a base primary input z = (1, 0), and probes z' on the unit
/// circle at the given angles.
#[derive(Debug, Clone)]
pub struct ConvergeConfig {
    pub widths_f: Vec<usize>,
    pub widths_g: Vec<usize>,
    pub meta_depth: usize,
    pub primary_depth: usize,
    pub n0: usize,
    pub thetas: Vec<f64>,
    pub n_seeds: usize,
    pub seed: u64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            widths_f: vec![32, 128, 512],
            widths_g: vec![32, 128, 512],
            meta_depth: 4,
            primary_depth: 4,
            n0: 2,
            thetas: (0..9)
                .map(|i| -std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / 8.0)
                .collect(),
            n_seeds: 200,
            seed: 0x636f6e76,
        }
    }
}

/// Per-(width pair, angle) summary of the empirical hyperkernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergeCell {
    pub width_f: usize,
    pub width_g: usize,
    pub theta: f64,
    pub mean_k: f64,
    pub var_k: f64,
    pub n_seeds: usize,
}

impl ConvergeConfig {
    /// The architecture whose analytic kernel the cells converge to.
    pub fn kernel_config(&self) -> HyperKernelConfig {
        HyperKernelConfig {
            meta_depth: self.meta_depth,
            primary_depth: self.primary_depth,
            n0: self.n0,
            m0: 2,
        }
    }

    /// The shared fixed meta input e_1 = (1, 0, ..., 0).
    pub fn probe_x(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n0];
        x[0] = 1.0;
        x
    }

    /// Base z followed by one probe per angle.
    pub fn probe_zs(&self) -> Vec<Vec<f64>> {
        let mut zs = vec![vec![1.0, 0.0]];
        zs.extend(self.thetas.iter().map(|&t| vec![t.cos(), t.sin()]));
        zs
    }
}

pub fn converge_experiment(cfg: &ConvergeConfig) -> Result<Vec<ConvergeCell>, FiniteError> {
    assert!(cfg.n_seeds >= 2);
    let x = cfg.probe_x();
    let zs = cfg.probe_zs();
    let mut out = Vec::new();
    for &wf in &cfg.widths_f {
        for &wg in &cfg.widths_g {
            let meta_hidden = vec![wf; cfg.meta_depth - 1];
            let mut primary_widths = vec![2];
            primary_widths.extend(std::iter::repeat(wg).take(cfg.primary_depth - 1));
            primary_widths.push(1);
            let mut sums = vec![0.0; cfg.thetas.len()];
            let mut sq_sums = vec![0.0; cfg.thetas.len()];
            for s in 0..cfg.n_seeds {
                let seed = cfg
                    .seed
                    .wrapping_add(
                        (((wf as u64) << 40) ^ ((wg as u64) << 20) ^ s as u64)
                            .wrapping_mul(0x9E37_79B9_7F4A_7C15),
                    );
                let ks =
                    streamed_hyper_kernels(cfg.n0, &meta_hidden, &primary_widths, &x, &zs, seed)?;
                for t in 0..cfg.thetas.len() {
                    sums[t] += ks[t + 1];
                    sq_sums[t] += ks[t + 1] * ks[t + 1];
                }
            }
            let n = cfg.n_seeds as f64;
            for (t, &theta) in cfg.thetas.iter().enumerate() {
                let mean = sums[t] / n;
                let var = (sq_sums[t] - n * mean * mean) / (n - 1.0);
                out.push(ConvergeCell {
                    width_f: wf,
                    width_g: wg,
                    theta,
                    mean_k: mean,
                    var_k: var.max(0.0),
                    n_seeds: cfg.n_seeds,
                });
            }
        }
    }
    Ok(out)
}

/// Kernel drift under one SGD step, per width and seed.
#[derive(Debug, Clone)]
pub struct DriftConfig {
    pub widths: Vec<usize>,
    pub n_seeds: usize,
    pub meta_depth: usize,
    pub primary_depth: usize,
    pub n0: usize,
    pub m0: usize,
    pub mu: f64,
    pub n_train: usize,
    /// Held-out probe inputs; drift is measured on their Gram matrix.
    pub n_probes: usize,
    pub seed: u64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            widths: vec![32, 64, 128, 256],
            n_seeds: 20,
            meta_depth: 2,
            primary_depth: 2,
            n0: 4,
            m0: 2,
            mu: 1.0,
            n_train: 32,
            n_probes: 4,
            seed: 0x64726966,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftRow {
    pub width: usize,
    pub seed_index: usize,
    pub rel_change: f64,
}

/// Relative change of the empirical hyperkernel after one full-batch SGD
/// step, measured as the Frobenius-norm change of the Gram matrix over a
/// fixed held-out probe set; at mu = 0 the change is exactly zero.
pub fn kernel_drift_experiment(cfg: &DriftConfig) -> Result<Vec<DriftRow>, FiniteError> {
    assert!(cfg.n_probes >= 2);
    let probes: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.n_probes as u64)
        .map(|i| {
            (
                normalized_gaussian(cfg.n0, cfg.seed, 200 + i),
                normalized_gaussian(cfg.m0, cfg.seed, 300 + i),
            )
        })
        .collect();
    let mut data_rng = stream_rng(cfg.seed, 105);
    let dataset: Vec<HyperSample> = (0..cfg.n_train)
        .map(|_| HyperSample {
            x: (0..cfg.n0).map(|_| data_rng.sample(StandardNormal)).collect(),
            z: (0..cfg.m0).map(|_| data_rng.sample(StandardNormal)).collect(),
            y: 0.5 * data_rng.sample::<f64, _>(StandardNormal),
        })
        .collect();

    let gram = |hw: &crate::finite::HypernetWeights| -> Result<Vec<Vec<f64>>, FiniteError> {
        let n = probes.len();
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let k = empirical_kernels(
                    hw,
                    (&probes[i].0, &probes[i].1),
                    (&probes[j].0, &probes[j].1),
                )?
                .k_h;
                g[i][j] = k;
            }
        }
        Ok(g)
    };

    let mut out = Vec::new();
    for &width in &cfg.widths {
        let meta_hidden: Vec<usize> = std::iter::once(cfg.n0)
            .chain(std::iter::repeat(width).take(cfg.meta_depth - 1))
            .collect();
        let mut primary_widths = vec![cfg.m0];
        primary_widths.extend(std::iter::repeat(width).take(cfg.primary_depth - 1));
        primary_widths.push(1);
        for s in 0..cfg.n_seeds {
            let seed = cfg.seed.wrapping_add(
                (((width as u64) << 32) ^ s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let mut hw = init_hypernet(&meta_hidden, &primary_widths, seed);
            let before = gram(&hw)?;
            sgd_train(&mut hw, &dataset, cfg.mu, 1, cfg.n_train, 2, seed ^ 0xABCD)?;
            let after = gram(&hw)?;
            let mut dsq = 0.0;
            let mut bsq = 0.0;
            for i in 0..probes.len() {
                for j in i..probes.len() {
                    let w = if i == j { 1.0 } else { 2.0 };
                    let d = after[i][j] - before[i][j];
                    dsq += w * d * d;
                    bsq += w * before[i][j] * before[i][j];
                }
            }
            out.push(DriftRow {
                width,
                seed_index: s,
                rel_change: (dsq / bsq.max(f64::MIN_POSITIVE)).sqrt(),
            });
        }
    }
    Ok(out)
}

/// Per-width medians of the drift rows, in the width order given.
pub fn drift_medians(widths: &[usize], rows: &[DriftRow]) -> Vec<(usize, f64)> {
    widths
        .iter()
        .map(|&w| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.width == w)
                .map(|r| r.rel_change)
                .collect();
            (w, median(&vals))
        })
        .collect()
}

/// Training a two-layer MLP at learning rate sqrt(width).
#[derive(Debug, Clone)]
pub struct LargeLrConfig {
    pub widths: Vec<usize>,
    pub input_dim: usize,
    /// Standard deviation of the input coordinates; small inputs keep the
    /// width-scaled learning rate inside the stable regime.
    pub input_scale: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub epochs: usize,
    pub batch: usize,
    pub loss_exponent: u32,
    pub n_seeds: usize,
    pub seed: u64,
}

impl Default for LargeLrConfig {
    fn default() -> Self {
        LargeLrConfig {
            widths: vec![100, 1000, 10000],
            input_dim: 10,
            input_scale: 0.02,
            n_train: 256,
            n_test: 256,
            epochs: 12,
            batch: 1,
            loss_exponent: 2,
            n_seeds: 5,
            seed: 0x6c61726c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainOutcome {
    /// The training loss became non-finite at this step.
    Diverged { step: usize },
    Finished {
        final_train_loss: f64,
        test_loss: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeLrRow {
    pub width: usize,
    pub seed_index: usize,
    pub mu: f64,
    pub outcome: TrainOutcome,
}

/// Linear-teacher regression data: x ~ scale * N(0, I), y = <w, x> with a
/// fixed unit teacher w. The teacher depends only on `seed`, so disjoint
/// train/test splits share it by varying `stream`.
pub fn synthetic_regression_data(
    n: usize,
    dim: usize,
    scale: f64,
    seed: u64,
    stream: u64,
) -> Vec<MlpSample> {
    let w = normalized_gaussian(dim, seed, 1);
    let inv = 1.0 / (dim as f64).sqrt();
    let mut rng = stream_rng(seed, stream);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dim)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let y = dot(&w, &x) * inv;
            MlpSample { x, y }
        })
        .collect()
}

fn squared_test_loss(w: &MlpWeights, test: &[MlpSample]) -> Result<f64, FiniteError> {
    let mut s = 0.0;
    for t in test {
        let f = forward_mlp(w, &t.x)?.output()[0];
        s += (f - t.y) * (f - t.y);
    }
    Ok(s / test.len() as f64)
}

/// Trains width-n two-layer MLPs at mu = sqrt(n); divergence is recorded
/// as an outcome, not an error.
pub fn large_lr_experiment(cfg: &LargeLrConfig) -> Result<Vec<LargeLrRow>, FiniteError> {
    let train =
        synthetic_regression_data(cfg.n_train, cfg.input_dim, cfg.input_scale, cfg.seed, 0);
    let test = synthetic_regression_data(cfg.n_test, cfg.input_dim, cfg.input_scale, cfg.seed, 2);
    let mut out = Vec::new();
    for &width in &cfg.widths {
        let mu = (width as f64).sqrt();
        for s in 0..cfg.n_seeds {
            let seed = cfg.seed.wrapping_add(
                (((width as u64) << 32) ^ s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let mut w = init_mlp(&[cfg.input_dim, width, 1], seed);
            let outcome = match sgd_train_mlp(
                &mut w,
                &train,
                mu,
                cfg.epochs,
                cfg.batch,
                cfg.loss_exponent,
                seed ^ 0x5744,
            ) {
                Ok(curve) => TrainOutcome::Finished {
                    final_train_loss: *curve.last().unwrap(),
                    test_loss: squared_test_loss(&w, &test)?,
                },
                Err(FiniteError::NonFiniteLoss { step }) => TrainOutcome::Diverged { step },
                Err(e) => return Err(e),
            };
            out.push(LargeLrRow {
                width,
                seed_index: s,
                mu,
                outcome,
            });
        }
    }
    Ok(out)
}

/// Kernel regression on a pixel task with held-out images as the test set.
#[derive(Debug, Clone)]
pub struct RegressConfig {
    pub n_train: usize,
    pub pixels_per_image: usize,
    pub n_test_images: usize,
    pub mode: TaskMode,
    pub fourier: Option<FourierSpec>,
    pub meta_depth: usize,
    pub primary_depth: usize,
    pub eps: f64,
    pub seed: u64,
}

impl Default for RegressConfig {
    fn default() -> Self {
        RegressConfig {
            n_train: 50,
            pixels_per_image: 1,
            n_test_images: 4,
            mode: TaskMode::Representation,
            fourier: Some(FourierSpec {
                k: 64,
                scale: crate::data::DEFAULT_FOURIER_SCALE,
                seed: 0x666f7572,
            }),
            meta_depth: 3,
            primary_depth: 2,
            eps: 0.001,
            seed: 0x72656772,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressOutcome {
    pub mse_nngp: f64,
    pub mse_ntk: f64,
    pub mse_mean: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// All (x, z, y) triples for every pixel of every image in the set, with
/// the same masking and Fourier conventions as `build_task`.
fn all_pixel_points(
    images: &ImageSet,
    mode: TaskMode,
    fourier: Option<FourierSpec>,
) -> Result<(Vec<Vec<f64>>, Vec<(usize, Vec<f64>)>, Vec<f64>), DataError> {
    let per = images.height * images.width;
    let task = build_task(images, images.count * per, per, mode, fourier, 0)?;
    let xs = task.xs;
    let points: Vec<(usize, Vec<f64>)> = task
        .samples
        .iter()
        .map(|s| (task.image_ids[s.image], s.z.clone()))
        .collect();
    // image_ids is a permutation of 0..count here; remap to source order.
    let mut slot_of = vec![0usize; images.count];
    for (slot, &id) in task.image_ids.iter().enumerate() {
        slot_of[id] = slot;
    }
    let xs_ordered: Vec<Vec<f64>> = (0..images.count).map(|id| xs[slot_of[id]].clone()).collect();
    let ys = task.samples.iter().map(|s| s.y).collect();
    Ok((xs_ordered, points, ys))
}

pub fn regress_experiment(
    images: &ImageSet,
    cfg: &RegressConfig,
) -> Result<RegressOutcome, ExperimentError> {
    assert!(images.count > cfg.n_test_images);
    let train_images = images.subset(0, images.count - cfg.n_test_images);
    let test_images = images.subset(images.count - cfg.n_test_images, cfg.n_test_images);
    let task = build_task(
        &train_images,
        cfg.n_train,
        cfg.pixels_per_image,
        cfg.mode,
        cfg.fourier,
        cfg.seed,
    )?;
    let (test_xs, test_points, test_ys) = all_pixel_points(&test_images, cfg.mode, cfg.fourier)?;

    let mut xs = task.xs.clone();
    let offset = xs.len();
    xs.extend(test_xs);
    let train_pts: Vec<HyperPoint> = task
        .samples
        .iter()
        .map(|s| HyperPoint {
            image: s.image,
            z: s.z.clone(),
        })
        .collect();
    let labels: Vec<f64> = task.samples.iter().map(|s| s.y).collect();
    let test_pts: Vec<HyperPoint> = test_points
        .iter()
        .map(|(id, z)| HyperPoint {
            image: offset + id,
            z: z.clone(),
        })
        .collect();

    let kcfg = HyperKernelConfig {
        meta_depth: cfg.meta_depth,
        primary_depth: cfg.primary_depth,
        n0: images.height * images.width,
        m0: task.m0,
    };
    let mut mses = [0.0; 2];
    for (slot, kind) in [HyperKernelKind::Nngp, HyperKernelKind::Ntk].iter().enumerate() {
        let kernel = CachedHyperKernel::new(&xs, kcfg, *kind);
        let pred = fit_predict(
            &train_pts,
            &labels,
            &test_pts,
            |a, b| kernel.eval(a, b),
            cfg.eps,
        )?;
        mses[slot] = mse(&pred, &test_ys);
    }
    let mean_y = labels.iter().sum::<f64>() / labels.len() as f64;
    let mse_mean = test_ys
        .iter()
        .map(|&y| (y - mean_y) * (y - mean_y))
        .sum::<f64>()
        / test_ys.len() as f64;
    Ok(RegressOutcome {
        mse_nngp: mses[0],
        mse_ntk: mses[1],
        mse_mean,
        n_train: task.samples.len(),
        n_test: test_ys.len(),
    })
}

/// Finite hypernetwork trained by SGD on the same task split as
/// `regress_experiment`.
#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub meta_width: usize,
    pub primary_width: usize,
    pub mu: f64,
    pub epochs: usize,
    pub batch: usize,
    pub loss_exponent: u32,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            meta_width: 64,
            primary_width: 64,
            mu: 0.05,
            epochs: 200,
            batch: 5,
            loss_exponent: 2,
            seed: 0x62617365,
        }
    }
}

pub fn sgd_baseline(
    images: &ImageSet,
    cfg: &RegressConfig,
    bl: &BaselineConfig,
) -> Result<f64, ExperimentError> {
    assert!(images.count > cfg.n_test_images);
    let train_images = images.subset(0, images.count - cfg.n_test_images);
    let test_images = images.subset(images.count - cfg.n_test_images, cfg.n_test_images);
    let task = build_task(
        &train_images,
        cfg.n_train,
        cfg.pixels_per_image,
        cfg.mode,
        cfg.fourier,
        cfg.seed,
    )?;
    let (test_xs, test_points, test_ys) = all_pixel_points(&test_images, cfg.mode, cfg.fourier)?;

    let dataset: Vec<HyperSample> = task
        .samples
        .iter()
        .map(|s| HyperSample {
            x: task.xs[s.image].clone(),
            z: s.z.clone(),
            y: s.y,
        })
        .collect();
    let n0 = images.height * images.width;
    let meta_hidden = vec![n0, bl.meta_width];
    let mut primary_widths = vec![task.m0];
    primary_widths.extend(std::iter::repeat(bl.primary_width).take(cfg.primary_depth - 1));
    primary_widths.push(1);
    let mut hw = init_hypernet(&meta_hidden, &primary_widths, bl.seed);
    sgd_train(
        &mut hw,
        &dataset,
        bl.mu,
        bl.epochs,
        bl.batch,
        bl.loss_exponent,
        bl.seed ^ 0x5744,
    )?;
    let mut s = 0.0;
    for ((id, z), &y) in test_points.iter().zip(&test_ys) {
        let f = crate::finite::forward_hypernet(&hw, &test_xs[*id], z)?.output()[0];
        s += (f - y) * (f - y);
    }
    Ok(s / test_ys.len() as f64)
}
