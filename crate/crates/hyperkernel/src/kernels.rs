//! Analytic infinite-width kernels.
//!
//! The meta network f contributes the NNGP kernel S^L and the NTK Theta^f.
//! The hypernetwork h(u) = g(z; f(x)) has NNGP covariances Lambda^l built by
//! Hadamard-multiplying the primary recursion with the 2x2 block of S^L, and
//! a hyperkernel Theta^h = Theta^f * Theta^g. The limits are sequential
//! (meta width first, then primary width): S^L enters the primary recursion
//! as an exact constant and no width parameter appears anywhere.

use crate::duals::{dual_relu, dual_relu_dot, CovPair, DualError};
use crate::linalg::{dot, gaussian_matrix, stream_rng, Matrix};
use rand::Rng;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Dual(#[from] DualError),
}

/// Architecture of a hypernetwork in the infinite-width limit: only depths
/// and input dimensions survive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperKernelConfig {
    /// Meta-network depth L.
    pub meta_depth: usize,
    /// Primary-network depth H.
    pub primary_depth: usize,
    /// Meta input dimension n0.
    pub n0: usize,
    /// Primary input dimension m0.
    pub m0: usize,
}

/// Per-layer derivative duals of one covariance block: both diagonals and
/// the off-diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualDots {
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
}

/// Per-layer kernel sequence for one input pair.
///
/// `covs[l]` is the covariance block at layer l (l = 0 is the raw input
/// inner products divided by input dimension). `dots[l]` holds the
/// derivative duals of `covs[l-1]` for l >= 1; `dots[0]` is a unit
/// placeholder so indices align with layer superscripts.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTrajectory {
    pub covs: Vec<CovPair>,
    pub dots: Vec<DualDots>,
}

impl KernelTrajectory {
    pub fn depth(&self) -> usize {
        self.covs.len() - 1
    }

    /// Covariance block of the network's linear output. The last weight
    /// layer is linear, so the output picks up one dual per hidden
    /// activation: Cov(y^L) is the layer-(L-1) block.
    pub fn output_cov(&self) -> CovPair {
        self.covs[self.depth() - 1]
    }

    /// Off-diagonal covariance of the network's linear output.
    pub fn final_offdiag(&self) -> f64 {
        self.output_cov().s12
    }
}

fn input_cov(x: &[f64], x_prime: &[f64]) -> Result<CovPair, KernelError> {
    if x.len() != x_prime.len() || x.is_empty() {
        return Err(KernelError::DimensionMismatch {
            expected: x.len().max(1),
            got: x_prime.len(),
        });
    }
    let n0 = x.len() as f64;
    Ok(CovPair {
        s11: dot(x, x) / n0,
        s12: dot(x, x_prime) / n0,
        s22: dot(x_prime, x_prime) / n0,
    })
}

fn step(cov: CovPair) -> Result<(CovPair, DualDots), KernelError> {
    let diag1 = CovPair {
        s11: cov.s11,
        s12: cov.s11,
        s22: cov.s11,
    };
    let diag2 = CovPair {
        s11: cov.s22,
        s12: cov.s22,
        s22: cov.s22,
    };
    let next = CovPair {
        s11: dual_relu(diag1)?,
        s12: dual_relu(cov)?,
        s22: dual_relu(diag2)?,
    };
    let dots = DualDots {
        d11: dual_relu_dot(diag1)?,
        d12: dual_relu_dot(cov)?,
        d22: dual_relu_dot(diag2)?,
    };
    Ok((next, dots))
}

const UNIT_DOTS: DualDots = DualDots {
    d11: 1.0,
    d12: 1.0,
    d22: 1.0,
};

/// NNGP trajectory of a depth-L ReLU MLP: S^0 = x.x'/n0, S^{l+1} =
/// dual_relu of the layer-l block.
pub fn mlp_nngp(x: &[f64], x_prime: &[f64], depth: usize) -> Result<KernelTrajectory, KernelError> {
    assert!(depth >= 1, "depth must be at least 1");
    let mut covs = Vec::with_capacity(depth + 1);
    let mut dots = Vec::with_capacity(depth + 1);
    covs.push(input_cov(x, x_prime)?);
    dots.push(UNIT_DOTS);
    for l in 0..depth {
        let (next, d) = step(covs[l])?;
        covs.push(next);
        dots.push(d);
    }
    Ok(KernelTrajectory { covs, dots })
}

/// NTK of the meta network read off an NNGP trajectory. The gradient with
/// respect to layer-l weights passes the activation gates at layers
/// l..L-1, each gating a pre-activation with covariance `covs[h-1]`:
/// Theta^f = sum_{l=1..L} S^{l-1}(x,x') prod_{h=l..L-1} dots_h.
pub fn ntk_from_trajectory(traj: &KernelTrajectory) -> f64 {
    let depth = traj.depth();
    let mut theta = 0.0;
    let mut tail = 1.0;
    for l in (1..=depth).rev() {
        theta += traj.covs[l - 1].s12 * tail;
        tail *= traj.dots[l - 1].d12;
    }
    theta
}

/// NTK of a depth-L ReLU MLP.
pub fn mlp_ntk(x: &[f64], x_prime: &[f64], depth: usize) -> Result<f64, KernelError> {
    Ok(ntk_from_trajectory(&mlp_nngp(x, x_prime, depth)?))
}

/// Full NNGP record of a hypernetwork input pair.
///
/// `sigmas[l]` is the post-activation covariance Sigma^l (l = 0 is
/// z.z'/m0); `lambdas[l]` for l >= 1 is the pre-activation block Lambda^l =
/// Sigma^{l-1} Hadamard the 2x2 S^L block; `sigma_dots[l]` are the
/// derivative duals of Lambda^l. Index 0 of `lambdas`/`sigma_dots` is a
/// placeholder.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperTrajectory {
    pub meta: KernelTrajectory,
    pub sigmas: Vec<CovPair>,
    pub lambdas: Vec<CovPair>,
    pub sigma_dots: Vec<DualDots>,
}

impl HyperTrajectory {
    pub fn primary_depth(&self) -> usize {
        self.sigmas.len() - 1
    }

    /// The 2x2 covariance block of the meta-network output v = f(x): the
    /// meta output is linear, so this is the layer-(L-1) block.
    pub fn s_final(&self) -> CovPair {
        self.meta.output_cov()
    }

    /// NNGP kernel of the hypernetwork output: off-diagonal of Lambda^H.
    pub fn nngp_kernel(&self) -> f64 {
        self.lambdas[self.primary_depth()].s12
    }
}

/// Runs the primary-side recursion given an already computed meta
/// trajectory; shared by `hyper_nngp` and the cached Gram assembly.
pub fn hyper_from_meta(
    meta: KernelTrajectory,
    z: &[f64],
    z_prime: &[f64],
    primary_depth: usize,
) -> Result<HyperTrajectory, KernelError> {
    assert!(primary_depth >= 1, "primary depth must be at least 1");
    let s_final = meta.output_cov();
    let mut sigmas = Vec::with_capacity(primary_depth + 1);
    let mut lambdas = Vec::with_capacity(primary_depth + 1);
    let mut sigma_dots = Vec::with_capacity(primary_depth + 1);
    sigmas.push(input_cov(z, z_prime)?);
    lambdas.push(CovPair {
        s11: 0.0,
        s12: 0.0,
        s22: 0.0,
    });
    sigma_dots.push(UNIT_DOTS);
    for l in 0..primary_depth {
        let lam = CovPair {
            s11: sigmas[l].s11 * s_final.s11,
            s12: sigmas[l].s12 * s_final.s12,
            s22: sigmas[l].s22 * s_final.s22,
        };
        let (next, d) = step(lam)?;
        lambdas.push(lam);
        sigma_dots.push(d);
        sigmas.push(next);
    }
    Ok(HyperTrajectory {
        meta,
        sigmas,
        lambdas,
        sigma_dots,
    })
}

/// Hypernetwork NNGP recursion (sequential infinite width).
pub fn hyper_nngp(
    x: &[f64],
    z: &[f64],
    x_prime: &[f64],
    z_prime: &[f64],
    cfg: HyperKernelConfig,
) -> Result<HyperTrajectory, KernelError> {
    check_dims(x, z, cfg)?;
    check_dims(x_prime, z_prime, cfg)?;
    let meta = mlp_nngp(x, x_prime, cfg.meta_depth)?;
    hyper_from_meta(meta, z, z_prime, cfg.primary_depth)
}

fn check_dims(x: &[f64], z: &[f64], cfg: HyperKernelConfig) -> Result<(), KernelError> {
    if x.len() != cfg.n0 {
        return Err(KernelError::DimensionMismatch {
            expected: cfg.n0,
            got: x.len(),
        });
    }
    if z.len() != cfg.m0 {
        return Err(KernelError::DimensionMismatch {
            expected: cfg.m0,
            got: z.len(),
        });
    }
    Ok(())
}

/// The conditional primary kernel Theta^g read off a hyper trajectory.
///
/// The gradient with respect to layer-l weights passes the activation
/// gates at primary layers l..H-1; each backward layer contributes the
/// derivative dual of its pre-activation block Lambda^h times S^L(x,x'),
/// the covariance of the generated weights V^{h+1} between the two meta
/// inputs.
pub fn theta_g_from_trajectory(traj: &HyperTrajectory) -> f64 {
    let h_depth = traj.primary_depth();
    let s12 = traj.s_final().s12;
    let mut theta = 0.0;
    let mut tail = 1.0;
    for l in (0..h_depth).rev() {
        theta += traj.sigmas[l].s12 * tail;
        tail *= s12 * traj.sigma_dots[l].d12;
    }
    theta
}

/// Hyperkernel Theta^h = Theta^f * Theta^g, with both factors returned.
pub fn hyper_ntk(
    x: &[f64],
    z: &[f64],
    x_prime: &[f64],
    z_prime: &[f64],
    cfg: HyperKernelConfig,
) -> Result<(f64, f64, f64), KernelError> {
    let traj = hyper_nngp(x, z, x_prime, z_prime, cfg)?;
    let theta_f = ntk_from_trajectory(&traj.meta);
    let theta_g = theta_g_from_trajectory(&traj);
    Ok((theta_f * theta_g, theta_f, theta_g))
}

/// Random Fourier features p(z) = cos(Wz + b), W ~ N(0,1), b ~ U[-pi, pi].
/// A pure function of (z.len(), k, seed): the same seed reuses the same
/// (W, b) across calls, as required when featurizing a whole task.
pub fn fourier_features(z: &[f64], k: usize, seed: u64) -> Vec<f64> {
    assert!(k >= 1, "k must be at least 1");
    let w = gaussian_matrix(k, z.len(), seed);
    let mut rng = stream_rng(seed, 1);
    (0..k)
        .map(|i| {
            let b: f64 = rng.gen_range(-PI..PI);
            (dot(w.row(i), z) + b).cos()
        })
        .collect()
}

/// The k -> infinity limit of (1/k) p(z).p(z'): exp(-|z - z'|^2 / 2) / 2.
pub fn fourier_limit_kernel(z: &[f64], z_prime: &[f64]) -> Result<f64, KernelError> {
    if z.len() != z_prime.len() {
        return Err(KernelError::DimensionMismatch {
            expected: z.len(),
            got: z_prime.len(),
        });
    }
    let sq: f64 = z
        .iter()
        .zip(z_prime)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((-sq / 2.0).exp() / 2.0)
}

/// The matrix of Fourier features for a batch of inputs, one row per input.
pub fn fourier_feature_rows(zs: &[Vec<f64>], k: usize, seed: u64) -> Matrix {
    let mut out = Matrix::zeros(zs.len(), k);
    for (i, z) in zs.iter().enumerate() {
        let f = fourier_features(z, k, seed);
        out.entries_mut()[i * k..(i + 1) * k].copy_from_slice(&f);
    }
    out
}
