//! Infinite-width kernels (NNGP and NTK) for fully connected ReLU networks
//! and hypernetworks, exact finite-width oracles, higher-order correlation
//! probes, and kernel ridge regression.
//!
//! A hypernetwork is the composition h(u) = g(z; f(x)): a meta network f
//! maps x to the weight vector of a primary network g, which consumes z.
//! Both networks use the NTK parameterization (1/sqrt(fan-in) layer scaling,
//! standard-normal weights, sqrt(2)-scaled ReLU), under which the kernels
//! below have width-free limits.

pub mod correlation;
pub mod data;
pub mod experiments;
pub mod duals;
pub mod finite;
pub mod kernels;
pub mod linalg;
pub mod regression;

pub use duals::{dual_relu, dual_relu_dot, mc_dual, CovPair, DualError};
pub use kernels::{
    fourier_features, fourier_limit_kernel, hyper_nngp, hyper_ntk, mlp_nngp, mlp_ntk,
    HyperKernelConfig, HyperTrajectory, KernelError, KernelTrajectory,
};
pub use linalg::{
    dot, fill_gaussian, gaussian_matrix, norm, ridge_solve, stream_rng, LinalgError, Matrix,
    SymMatrix, RNG_VERSION,
};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
