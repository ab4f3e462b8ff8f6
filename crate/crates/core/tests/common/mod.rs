//! Test-side oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pwlik::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Sorted points in [0, 1] with every gap at least `min_gap` times the mean gap.
pub fn random_design(rng: &mut ChaCha8Rng, n: usize, min_gap: f64) -> Design {
    let gaps: Vec<f64> = (0..n).map(|_| min_gap + rng.random::<f64>()).collect();
    let total: f64 = gaps.iter().sum();
    let mut acc = 0.0;
    let pts = gaps
        .iter()
        .map(|g| {
            let p = acc / total;
            acc += g;
            p
        })
        .collect();
    Design::new(pts).unwrap()
}

pub fn random_weights(rng: &mut ChaCha8Rng, k: usize) -> WeightSeq {
    let mut w: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    w[k - 1] += 0.1;
    WeightSeq::new(w).unwrap()
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn correlation_matrix(s: &[f64], theta: f64) -> DMatrix<f64> {
    DMatrix::from_fn(s.len(), s.len(), |i, j| (-theta * (s[i] - s[j]).abs()).exp())
}

/// `ln det Σ + zᵀΣ⁻¹z` through a dense Cholesky factorization.
pub fn dense_neg2_loglik(psi: &CovParams, path: &SamplePath) -> f64 {
    let cov = correlation_matrix(path.points(), psi.theta()) * psi.sigma2();
    let ch = cov.cholesky().expect("positive definite");
    let logdet = 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let z = DVector::from_column_slice(path.values());
    let y = ch.l().solve_lower_triangular(&z).unwrap();
    logdet + y.norm_squared()
}

/// `(1/n) var Σ w_{j−i}(W_{ij}² − 1) = (2/n) tr(AΣAΣ)` with
/// `A = Σ w a aᵀ`, `a` the coefficient vector of `W_{ij}`.
pub fn dense_tau2(design: &Design, w: &WeightSeq, theta: f64) -> f64 {
    let s = design.points();
    let n = s.len();
    let sigma = correlation_matrix(s, theta);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n.min(i + w.cutoff() + 1) {
            let wk = w.lag(j - i);
            let rho = (-theta * (s[j] - s[i])).exp();
            let sd = (1.0 - rho * rho).sqrt();
            let mut v = DVector::zeros(n);
            v[j] = 1.0 / sd;
            v[i] = -rho / sd;
            a += &v * v.transpose() * wk;
        }
    }
    let m = &a * &sigma;
    2.0 * (&m * &m).trace() / n as f64
}

/// Minimizer of `f(e^u)` over `u ∈ [lo, hi]`, by bisection on the sign of
/// the central difference `f(e^{u+h}) − f(e^{u−h})`. Comparing values
/// directly cannot resolve the minimizer beyond about `sqrt(ε)`.
pub fn numeric_log_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let h = 1e-4;
    let slope = |u: f64| f((u + h).exp()) - f((u - h).exp());
    let (mut a, mut b) = (lo, hi);
    assert!(slope(a) < 0.0 && slope(b) > 0.0, "minimizer not bracketed");
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if slope(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    (0.5 * (a + b)).exp()
}
