//! Minimal dense numerical substrate: row-major matrices, symmetric
//! solves with jitter escalation, and seeded Gaussian sampling.
//!
//! All randomness in the crate flows through [`stream_rng`]: ChaCha8 with a
//! per-(seed, stream) counter layout, so any component can draw an
//! independent substream reproducibly regardless of evaluation order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Identifier of the deterministic generator, recorded in run manifests.
pub const RNG_VERSION: &str = "chacha8-streams-v1";

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("system is singular even after jitter escalation up to {max_jitter:e}")]
    SingularSystem { max_jitter: f64 },
}

/// Deterministic substream generator: same (seed, stream) always yields the
/// same sequence, independent of what other streams were drawn.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        Ok(Matrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `self^T * x`.
    pub fn matvec_transposed(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(i)) {
                *o += xi * w;
            }
        }
        Ok(out)
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.entries[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Rank-1 update `self += alpha * u v^T`.
    pub fn add_outer(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (i, &ui) in u.iter().enumerate() {
            let c = alpha * ui;
            let row = &mut self.entries[i * self.cols..(i + 1) * self.cols];
            for (r, &vj) in row.iter_mut().zip(v) {
                *r += c * vj;
            }
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Matrix with i.i.d. standard-normal entries, a pure function of
/// `(rows, cols, seed)`.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = stream_rng(seed, 0);
    let entries = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Matrix {
        rows,
        cols,
        entries,
    }
}

/// Fill `buf` with standard normals from substream `stream` of `seed`.
pub fn fill_gaussian(buf: &mut [f64], seed: u64, stream: u64) {
    let mut rng = stream_rng(seed, stream);
    for v in buf.iter_mut() {
        *v = rng.sample::<f64, _>(StandardNormal);
    }
}

/// Symmetric matrix in full storage; both triangles kept equal.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            entries: vec![0.0; n * n],
        }
    }

    /// Builds from a symmetric generator; `f` is only called for `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.entries[i * n + j] = v;
                m.entries[j * n + i] = v;
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.n + j] = v;
        self.entries[j * self.n + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok((0..self.n)
            .map(|i| dot(&self.entries[i * self.n..(i + 1) * self.n], x))
            .collect())
    }

    /// Cholesky factor of `self + shift*I`, or None if not positive definite.
    fn cholesky(&self, shift: f64) -> Option<Vec<f64>> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                if i == j {
                    s += shift;
                }
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(l)
    }

    /// Positive semi-definite up to tolerance: `self + tol*I` admits a
    /// Cholesky factorization, i.e. the smallest eigenvalue exceeds `-tol`.
    pub fn is_psd_within(&self, tol: f64) -> bool {
        self.cholesky(tol).is_some()
    }
}

/// Solves `(K + eps*I) x = y` by Cholesky. If the factorization fails,
/// jitter escalates from `1e-12 * trace/n` by factors of 10 up to
/// `1e-6 * trace/n` before reporting `SingularSystem`.
pub fn ridge_solve(k: &SymMatrix, y: &[f64], eps: f64) -> Result<Vec<f64>, LinalgError> {
    let n = k.n();
    if y.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = (k.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
    let max_jitter = 1e-6 * scale;
    let mut jitter = 0.0;
    loop {
        if let Some(l) = k.cholesky(eps + jitter) {
            return Ok(cholesky_solve(&l, n, y));
        }
        jitter = if jitter == 0.0 {
            1e-12 * scale
        } else {
            jitter * 10.0
        };
        if jitter > max_jitter {
            return Err(LinalgError::SingularSystem { max_jitter });
        }
    }
}

fn cholesky_solve(l: &[f64], n: usize, y: &[f64]) -> Vec<f64> {
    // L z = y
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    // L^T x = z
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_matrix_is_deterministic() {
        let a = gaussian_matrix(3, 2, 42);
        let b = gaussian_matrix(3, 2, 42);
        assert_eq!(a, b);
        let c = gaussian_matrix(3, 2, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_matrix_shape() {
        let m = gaussian_matrix(2, 3, 7);
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 3);
        assert_eq!(m.entries().len(), 6);
    }

    #[test]
    fn gaussian_matrix_moments() {
        let m = gaussian_matrix(1000, 1000, 1);
        let n = m.entries().len() as f64;
        let mean = m.entries().iter().sum::<f64>() / n;
        let var = m.entries().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((0.99..=1.01).contains(&var), "var {var}");
    }

    #[test]
    fn ridge_solve_identity() {
        let k = SymMatrix::from_fn(3, |i, j| if i == j { 1.0 } else { 0.0 });
        let x = ridge_solve(&k, &[1.0, 2.0, 3.0], 0.0).unwrap();
        for (a, b) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ridge_solve_scalar() {
        let mut k = SymMatrix::zeros(1);
        k.set(0, 0, 2.0);
        let x = ridge_solve(&k, &[4.0], 1.0).unwrap();
        assert!((x[0] - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn ridge_solve_residual_on_random_spd() {
        let n = 20;
        let a = gaussian_matrix(n, n, 5);
        // K = A A^T / n is SPD with probability one.
        let k = SymMatrix::from_fn(n, |i, j| dot(a.row(i), a.row(j)) / n as f64);
        let mut rng = stream_rng(6, 0);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eps = 0.01;
        let x = ridge_solve(&k, &y, eps).unwrap();
        let mut r = k.matvec(&x).unwrap();
        for (ri, (xi, yi)) in r.iter_mut().zip(x.iter().zip(&y)) {
            *ri += eps * xi;
            *ri -= yi;
        }
        assert!(norm(&r) <= 1e-8 * norm(&y));
    }

    #[test]
    fn ridge_solve_singular_reports_error() {
        // Rank-1 matrix with eps = 0 cannot be factorized even with jitter
        // bounded by 1e-6 * trace/n ... actually jitter makes it PD, so use
        // an indefinite matrix instead.
        let mut k = SymMatrix::zeros(2);
        k.set(0, 0, 1.0);
        k.set(1, 1, -1.0);
        assert!(matches!(
            ridge_solve(&k, &[1.0, 1.0], 0.0),
            Err(LinalgError::SingularSystem { .. })
        ));
    }

    #[test]
    fn psd_check_accepts_gram_rejects_indefinite() {
        let a = gaussian_matrix(8, 4, 9);
        let gram = SymMatrix::from_fn(8, |i, j| dot(a.row(i), a.row(j)));
        let tol = 1e-8 * gram.trace() / 8.0;
        assert!(gram.is_psd_within(tol));
        let mut bad = SymMatrix::zeros(2);
        bad.set(0, 0, 1.0);
        bad.set(1, 1, -1.0);
        assert!(!bad.is_psd_within(1e-8));
    }

    #[test]
    fn matvec_transposed_matches_dense() {
        let m = gaussian_matrix(5, 3, 11);
        let x = [0.3, -0.7, 1.1, 0.2, -0.4];
        let t = m.matvec_transposed(&x).unwrap();
        for j in 0..3 {
            let direct: f64 = (0..5).map(|i| m.get(i, j) * x[i]).sum();
            assert!((t[j] - direct).abs() < 1e-12);
        }
    }
}
