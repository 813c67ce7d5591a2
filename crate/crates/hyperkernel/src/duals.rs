//! Bivariate-Gaussian dual expectations for ReLU.
//!
//! With (u, v) ~ N(0, Lambda), the recursions consume
//! `dual_relu` = 2 E[relu(u) relu(v)] and `dual_relu_dot` = 2 E[1{u>0} 1{v>0}].
//! Both carry the factor 2 of the sqrt(2) activation convention, so that on
//! the diagonal (u = v) the first preserves variance and the second equals 1.
//! The closed forms are the arc-cosine kernels of degree 1 and 0; `mc_dual`
//! is the Monte Carlo oracle they are validated against.

use crate::linalg::stream_rng;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DualError {
    #[error("invalid covariance: s11={s11}, s12={s12}, s22={s22}")]
    InvalidCov { s11: f64, s12: f64, s22: f64 },
}

/// A 2x2 covariance block (Var u, Cov(u,v), Var v).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovPair {
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

impl CovPair {
    pub fn new(s11: f64, s12: f64, s22: f64) -> Result<Self, DualError> {
        let pair = CovPair { s11, s12, s22 };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<(), DualError> {
        let ok = self.s11 >= 0.0
            && self.s22 >= 0.0
            && self.s11.is_finite()
            && self.s12.is_finite()
            && self.s22.is_finite()
            && self.s12 * self.s12 <= self.s11 * self.s22 + 1e-12;
        if ok {
            Ok(())
        } else {
            Err(DualError::InvalidCov {
                s11: self.s11,
                s12: self.s12,
                s22: self.s22,
            })
        }
    }

    /// Correlation coefficient clamped to [-1, 1]; recursion rounding can
    /// push it infinitesimally outside.
    fn clamped_corr(&self) -> f64 {
        let denom = (self.s11 * self.s22).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            (self.s12 / denom).clamp(-1.0, 1.0)
        }
    }
}

/// 2 E[relu(u) relu(v)] under N(0, Lambda), in closed form.
///
/// Zero-variance convention: returns 0 when s11*s22 == 0 (a zero
/// pre-activation has zero ReLU output).
pub fn dual_relu(lam: CovPair) -> Result<f64, DualError> {
    lam.validate()?;
    let scale = (lam.s11 * lam.s22).sqrt();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let c = lam.clamped_corr();
    let theta = c.acos();
    Ok(scale * (theta.sin() + (PI - theta) * c) / PI)
}

/// 2 E[1{u>0} 1{v>0}] under N(0, Lambda).
///
/// Zero-variance convention: returns 0 when s11*s22 == 0 (the derivative
/// kernel of a zero-variance signal is arbitrary at a measure-zero point;
/// we pick 0 so degenerate inputs propagate zeros).
pub fn dual_relu_dot(lam: CovPair) -> Result<f64, DualError> {
    lam.validate()?;
    if lam.s11 * lam.s22 == 0.0 {
        return Ok(0.0);
    }
    let theta = lam.clamped_corr().acos();
    Ok((PI - theta) / PI)
}

/// Monte Carlo estimates of both duals with standard errors.
///
/// Samples (u, v) via the 2x2 Cholesky factor of Lambda; deterministic
/// given the seed.
pub fn mc_dual(
    lam: CovPair,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64, f64, f64), DualError> {
    lam.validate()?;
    assert!(n_samples >= 1000, "mc_dual needs at least 1000 samples");
    let a = lam.s11.sqrt();
    let (b, c) = if a > 0.0 {
        let b = lam.s12 / a;
        (b, (lam.s22 - b * b).max(0.0).sqrt())
    } else {
        (0.0, lam.s22.sqrt())
    };
    let mut rng = stream_rng(seed, 0);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut sum_dot = 0.0;
    for _ in 0..n_samples {
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        let u = a * g1;
        let v = b * g1 + c * g2;
        let s = 2.0 * u.max(0.0) * v.max(0.0);
        sum += s;
        sum_sq += s * s;
        if u > 0.0 && v > 0.0 {
            sum_dot += 1.0;
        }
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let stderr = (var / n).sqrt();
    // The dot dual is 2x a Bernoulli mean.
    let p = sum_dot / n;
    let mean_dot = 2.0 * p;
    let stderr_dot = 2.0 * (p * (1.0 - p) / n).sqrt();
    Ok((mean, stderr, mean_dot, stderr_dot))
}
