//! Kernel ridge regression with any pair kernel, including the subset
//! ensemble scheme and a cached Gram assembly that exploits the
//! hyperkernel factorization: samples sharing the same image x reuse one
//! meta-network trajectory per image pair.

use crate::kernels::{
    hyper_from_meta, mlp_nngp, ntk_from_trajectory, theta_g_from_trajectory, HyperKernelConfig,
    KernelTrajectory,
};
use crate::linalg::{ridge_solve, LinalgError, SymMatrix};
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

/// Default ridge parameter.
pub const DEFAULT_EPS: f64 = 0.001;

/// A Gram matrix with labels and ridge parameter.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub k: SymMatrix,
    pub y: Vec<f64>,
    pub eps: f64,
}

impl GramSystem {
    pub fn solve(&self) -> Result<Vec<f64>, LinalgError> {
        ridge_solve(&self.k, &self.y, self.eps)
    }
}

/// Kernel ridge regression: for each test input u, predicts
/// k_vec(u) . (K + eps I)^{-1} Y.
pub fn fit_predict<T>(
    train: &[T],
    labels: &[f64],
    test: &[T],
    kernel: impl Fn(&T, &T) -> f64,
    eps: f64,
) -> Result<Vec<f64>, LinalgError> {
    assert_eq!(train.len(), labels.len());
    assert!(!train.is_empty());
    let n = train.len();
    let k = SymMatrix::from_fn(n, |i, j| kernel(&train[i], &train[j]));
    let alpha = GramSystem {
        k,
        y: labels.to_vec(),
        eps,
    }
    .solve()?;
    Ok(test
        .iter()
        .map(|u| {
            train
                .iter()
                .zip(&alpha)
                .map(|(t, &a)| kernel(u, t) * a)
                .sum()
        })
        .collect())
}

/// Average of `fit_predict` over training subsets.
pub fn ensemble_predict<T>(
    subsets: &[(Vec<T>, Vec<f64>)],
    test: &[T],
    kernel: impl Fn(&T, &T) -> f64,
    eps: f64,
) -> Result<Vec<f64>, LinalgError> {
    assert!(!subsets.is_empty());
    let mut acc = vec![0.0; test.len()];
    for (train, labels) in subsets {
        assert!(!train.is_empty());
        let pred = fit_predict(train, labels, test, &kernel, eps)?;
        for (a, p) in acc.iter_mut().zip(pred) {
            *a += p;
        }
    }
    for a in acc.iter_mut() {
        *a /= subsets.len() as f64;
    }
    Ok(acc)
}

/// Which analytic hypernetwork kernel to use for regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperKernelKind {
    /// NNGP posterior mean: off-diagonal of Lambda^H.
    Nngp,
    /// Hyperkernel Theta^h = Theta^f * Theta^g.
    Ntk,
}

/// A hypernetwork input referencing a shared image by index.
#[derive(Debug, Clone)]
pub struct HyperPoint {
    pub image: usize,
    pub z: Vec<f64>,
}

/// Kernel evaluator over (image index, z) pairs that caches the meta
/// trajectory and Theta^f once per image pair.
pub struct CachedHyperKernel<'a> {
    xs: &'a [Vec<f64>],
    cfg: HyperKernelConfig,
    kind: HyperKernelKind,
    cache: RefCell<HashMap<(usize, usize), Rc<(KernelTrajectory, f64)>>>,
}

impl<'a> CachedHyperKernel<'a> {
    pub fn new(xs: &'a [Vec<f64>], cfg: HyperKernelConfig, kind: HyperKernelKind) -> Self {
        CachedHyperKernel {
            xs,
            cfg,
            kind,
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn meta_pair(&self, i: usize, j: usize) -> Rc<(KernelTrajectory, f64)> {
        let key = if i <= j { (i, j) } else { (j, i) };
        if let Some(hit) = self.cache.borrow().get(&key) {
            return hit.clone();
        }
        let traj = mlp_nngp(&self.xs[key.0], &self.xs[key.1], self.cfg.meta_depth).unwrap();
        let theta_f = ntk_from_trajectory(&traj);
        let entry = Rc::new((traj, theta_f));
        self.cache.borrow_mut().insert(key, entry.clone());
        entry
    }

    pub fn eval(&self, a: &HyperPoint, b: &HyperPoint) -> f64 {
        let swap = a.image > b.image;
        let (lo, hi) = if swap { (b, a) } else { (a, b) };
        let pair = self.meta_pair(lo.image, hi.image);
        let traj =
            hyper_from_meta(pair.0.clone(), &lo.z, &hi.z, self.cfg.primary_depth).unwrap();
        match self.kind {
            HyperKernelKind::Nngp => traj.nngp_kernel(),
            HyperKernelKind::Ntk => pair.1 * theta_g_from_trajectory(&traj),
        }
    }
}

/// Mean squared error between predictions and targets.
pub fn mse(pred: &[f64], target: &[f64]) -> f64 {
    assert_eq!(pred.len(), target.len());
    pred.iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64
}
