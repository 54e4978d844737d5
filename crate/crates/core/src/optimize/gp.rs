//! Gaussian-process surrogate with a squared-exponential kernel, plus the
//! expected-improvement acquisition score.
//!
//! The kernel matrix `K = k(X, X) + (sigma_n^2 + jitter) I` is factorized by
//! a plain Cholesky decomposition; the jitter starts at 1e-8 and escalates
//! by decades on failure before giving up. Posterior mean and variance
//! follow the standard closed forms `m(x) = k(x,X)^T K^-1 y` and
//! `v(x) = k(x,x) - k(x,X)^T K^-1 k(x,X)`, with the variance clamped at
//! zero from below.

use crate::error::{Result, SimError};

/// Fixed kernel hyperparameters. The defaults assume inputs scaled to the
/// unit cube and targets standardized to zero mean and unit variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpHyper {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Default for GpHyper {
    fn default() -> Self {
        GpHyper {
            lengthscale: 0.2,
            signal_variance: 1.0,
            noise_variance: 1e-6,
        }
    }
}

const BASE_JITTER: f64 = 1e-8;
const JITTER_STEPS: u32 = 5;

#[derive(Debug, Clone)]
pub struct GpModel {
    hyper: GpHyper,
    inputs: Vec<Vec<f64>>,
    /// Lower Cholesky factor of K, row-major n x n.
    chol: Vec<f64>,
    /// K^-1 y.
    alpha: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// In-place lower Cholesky factorization; fails on a non-positive pivot.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return false;
                }
                a[i * n + i] = sum.sqrt();
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
        for j in (i + 1)..n {
            a[i * n + j] = 0.0;
        }
    }
    true
}

/// Solve L w = b.
fn forward_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * w[k];
        }
        w[i] = sum / l[i * n + i];
    }
    w
}

/// Solve L^T x = w.
fn backward_solve(l: &[f64], n: usize, w: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = w[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

impl GpModel {
    /// Fit the posterior on `inputs` (rows of equal dimension) and
    /// `targets`.
    pub fn fit(inputs: &[Vec<f64>], targets: &[f64], hyper: GpHyper) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(SimError::InvalidArgument(
                "fit requires one target per input and at least one point".into(),
            ));
        }
        if hyper.lengthscale <= 0.0 || hyper.signal_variance <= 0.0 || hyper.noise_variance < 0.0 {
            return Err(SimError::InvalidArgument(
                "hyperparameters require lengthscale > 0, signal variance > 0, noise variance >= 0".into(),
            ));
        }
        let dim = inputs[0].len();
        for point in inputs {
            if point.len() != dim {
                return Err(SimError::DimensionMismatch {
                    expected: dim,
                    got: point.len(),
                });
            }
            if point.iter().any(|c| !c.is_finite()) {
                return Err(SimError::NonFinite("GP input"));
            }
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(SimError::NonFinite("GP target"));
        }

        let n = inputs.len();
        let two_len_sq = 2.0 * hyper.lengthscale * hyper.lengthscale;
        let mut base = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = hyper.signal_variance * (-sq_dist(&inputs[i], &inputs[j]) / two_len_sq).exp();
                base[i * n + j] = k;
                base[j * n + i] = k;
            }
        }
        let mut jitter = BASE_JITTER;
        for _ in 0..JITTER_STEPS {
            let mut chol = base.clone();
            for i in 0..n {
                chol[i * n + i] += hyper.noise_variance + jitter;
            }
            if cholesky(&mut chol, n) {
                let w = forward_solve(&chol, n, targets);
                let alpha = backward_solve(&chol, n, &w);
                return Ok(GpModel {
                    hyper,
                    inputs: inputs.to_vec(),
                    chol,
                    alpha,
                });
            }
            jitter *= 10.0;
        }
        Err(SimError::SingularKernel)
    }

    /// Posterior mean and variance at a point.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.inputs[0].len() {
            return Err(SimError::DimensionMismatch {
                expected: self.inputs[0].len(),
                got: x.len(),
            });
        }
        let n = self.inputs.len();
        let two_len_sq = 2.0 * self.hyper.lengthscale * self.hyper.lengthscale;
        let k_star: Vec<f64> = self
            .inputs
            .iter()
            .map(|xi| self.hyper.signal_variance * (-sq_dist(x, xi) / two_len_sq).exp())
            .collect();
        let mean = k_star.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        let w = forward_solve(&self.chol, n, &k_star);
        let variance = self.hyper.signal_variance - w.iter().map(|v| v * v).sum::<f64>();
        Ok((mean, variance.max(0.0)))
    }
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF via the Zelen–Severo rational approximation
/// (Abramowitz & Stegun 26.2.17), absolute error below 7.5e-8.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - std_normal_cdf(-x);
    }
    const B: [f64; 5] = [
        0.319_381_530,
        -0.356_563_782,
        1.781_477_937,
        -1.821_255_978,
        1.330_274_429,
    ];
    let t = 1.0 / (1.0 + 0.231_641_9 * x);
    let poly = t * (B[0] + t * (B[1] + t * (B[2] + t * (B[3] + t * B[4]))));
    1.0 - std_normal_pdf(x) * poly
}

/// Expected improvement of a Gaussian belief (mean, variance) over
/// `best_so_far`, under the minimization convention. Zero variance reduces
/// to the deterministic improvement `max(best - mean, 0)`.
pub fn expected_improvement(mean: f64, variance: f64, best_so_far: f64) -> Result<f64> {
    if variance < 0.0 {
        return Err(SimError::InvalidArgument("variance must be >= 0".into()));
    }
    let delta = best_so_far - mean;
    if variance == 0.0 {
        return Ok(delta.max(0.0));
    }
    let sigma = variance.sqrt();
    let z = delta / sigma;
    Ok((delta * std_normal_cdf(z) + sigma * std_normal_pdf(z)).max(0.0))
}
