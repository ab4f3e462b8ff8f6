//! Asymptotic variance of the pairwise estimators of `θσ²`.
//!
//! With `W_{i,j} = (Z(s_j) − ρ_{ij}Z(s_i)) / sqrt(σ²(1 − ρ_{ij}²))` the
//! standardized innovation of pair `(i, j)`, the quantity driving the
//! asymptotic variance is
//! `τ_n² = (1/n) var Σ_{i<j≤i+K} w_{j−i}(W_{i,j}² − 1)`.
//! For Gaussian `W`, `cov(W²_a − 1, W²_b − 1) = 2 cov(W_a, W_b)²`, which gives
//! [`tau2_exact`]; [`tau2_approx`] replaces each squared covariance by the
//! overlap coefficient [`b_coeff`], which depends on the design only.
//!
//! Indices are 0-based throughout.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CovParams, Design, WeightSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TauMethod {
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauResult {
    pub tau2: f64,
    pub method: TauMethod,
    pub n: usize,
    /// Weight cutoff.
    pub k: usize,
}

/// Which estimator's asymptotic variance to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AsymKind {
    /// Full maximum likelihood.
    Mle,
    /// Weighted pairwise and pairwise conditional estimators (they share it).
    Wp,
}

fn check_pair(i: usize, j: usize, n: usize) -> Result<()> {
    if i >= j || j >= n {
        return Err(Error::Index(format!("need i < j < n, got i={i}, j={j}, n={n}")));
    }
    Ok(())
}

/// Overlap coefficient of the pairs `(i, j)` and `(k, l)`, in `[0, 1]`.
///
/// For `i ≤ k`: `0` if `j ≤ k`; `(s_j − s_k)² / ((s_j − s_i)(s_l − s_k))` if
/// `k ≤ j ≤ l`; `(s_l − s_k)/(s_j − s_i)` if `l ≤ j`. Symmetric in the pairs.
pub fn b_coeff(i: usize, j: usize, k: usize, l: usize, design: &Design) -> Result<f64> {
    let n = design.len();
    check_pair(i, j, n)?;
    check_pair(k, l, n)?;
    Ok(b_unchecked(i, j, k, l, design.points()))
}

#[inline]
fn b_unchecked(i: usize, j: usize, k: usize, l: usize, s: &[f64]) -> f64 {
    // lexicographic order makes the symmetry exact when i = k
    let (i, j, k, l) = if (i, j) <= (k, l) { (i, j, k, l) } else { (k, l, i, j) };
    if j <= k {
        0.0
    } else if j <= l {
        let d = s[j] - s[k];
        d * d / ((s[j] - s[i]) * (s[l] - s[k]))
    } else {
        (s[l] - s[k]) / (s[j] - s[i])
    }
}

fn check_cutoff(design: &Design, w: &WeightSeq) -> Result<()> {
    if design.len() <= w.cutoff() {
        return Err(Error::InvalidDesign(format!(
            "need more points ({}) than the weight cutoff ({})",
            design.len(),
            w.cutoff()
        )));
    }
    Ok(())
}

/// `(2/n) Σ_{pairs a} Σ_{pairs b} w_a w_b g(a, b)` over pairs of lag at most
/// `K`. `g` must vanish for non-overlapping pairs; only pairs `b = (k, l)`
/// with `|k − i| < K` are visited. Per-`i` partial sums are reduced in index
/// order, so the result does not depend on the thread count.
fn weighted_double_sum(n: usize, w: &WeightSeq, g: impl Fn(usize, usize, usize, usize) -> f64 + Sync) -> f64 {
    let kmax = w.cutoff();
    let partial: Vec<f64> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (di, wa) in w.active_lags(n - i) {
                let j = i + di;
                for k in i.saturating_sub(kmax - 1)..j {
                    for (dk, wb) in w.active_lags(n - k) {
                        let l = k + dk;
                        if l > i {
                            acc += wa * wb * g(i, j, k, l);
                        }
                    }
                }
            }
            acc
        })
        .collect();
    2.0 * partial.iter().sum::<f64>() / n as f64
}

/// Design-only approximation of `τ_n²`, `(2/n) ΣΣ w_{j−i} w_{l−k} b_{i,j,k,l}`.
pub fn tau2_approx(design: &Design, w: &WeightSeq) -> Result<TauResult> {
    check_cutoff(design, w)?;
    let s = design.points();
    let tau2 = weighted_double_sum(design.len(), w, |i, j, k, l| b_unchecked(i, j, k, l, s));
    Ok(TauResult {
        tau2,
        method: TauMethod::Approx,
        n: design.len(),
        k: w.cutoff(),
    })
}

/// `cov(W_{i,j}, W_{k,l})` under correlation `e^{−θ|s−t|}`.
fn innovation_cov(i: usize, j: usize, k: usize, l: usize, s: &[f64], theta: f64) -> f64 {
    let r = |a: usize, b: usize| (-theta * (s[a] - s[b]).abs()).exp();
    let (rij, rkl) = (r(i, j), r(k, l));
    let num = r(j, l) - rkl * r(j, k) - rij * r(i, l) + rij * rkl * r(i, k);
    let den = ((-(-2.0 * theta * (s[j] - s[i])).exp_m1()) * (-(-2.0 * theta * (s[l] - s[k])).exp_m1())).sqrt();
    num / den
}

/// `τ_n²` itself, through the closed-form covariances of the standardized
/// innovations at scale `theta0`. The variance cancels.
pub fn tau2_exact(design: &Design, w: &WeightSeq, theta0: f64) -> Result<TauResult> {
    check_cutoff(design, w)?;
    if !(theta0.is_finite() && theta0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "theta0 must be positive, got {theta0}"
        )));
    }
    let s = design.points();
    let tau2 = weighted_double_sum(design.len(), w, |i, j, k, l| {
        // innovations over disjoint intervals are independent
        if j <= k || l <= i {
            return 0.0;
        }
        let c = innovation_cov(i, j, k, l, s, theta0);
        c * c
    });
    Ok(TauResult {
        tau2,
        method: TauMethod::Exact,
        n: design.len(),
        k: w.cutoff(),
    })
}

/// Asymptotic variance of the estimated `θσ²` at sample size `n = design.len()`:
/// `2(σ₀²θ₀)²/n` for the MLE and `(σ₀²θ₀)² τ̂_n² / (n (Σw)²)` for the
/// pairwise estimators.
pub fn asymptotic_variance(kind: AsymKind, psi0: &CovParams, design: &Design, w: &WeightSeq) -> Result<f64> {
    let n = design.len() as f64;
    let m2 = psi0.microergodic().powi(2);
    match kind {
        AsymKind::Mle => Ok(2.0 * m2 / n),
        AsymKind::Wp => Ok(wp_variance_from_tau(psi0, &tau2_approx(design, w)?, w)),
    }
}

/// Asymptotic variance of the weighted pairwise estimate of `θσ²` for a
/// given `τ²`, approximate or exact.
pub fn wp_variance_from_tau(psi0: &CovParams, tau: &TauResult, w: &WeightSeq) -> f64 {
    psi0.microergodic().powi(2) * tau.tau2 / (tau.n as f64 * w.sum().powi(2))
}

/// The constant `C` with `√n(θ̂σ̂²/(θ₀σ₀²) − 1) → N(0, C²)`: `√2` for the MLE
/// and `τ̂_n / Σw` for the pairwise estimators.
pub fn normalizing_constant(kind: AsymKind, design: &Design, w: &WeightSeq) -> Result<f64> {
    match kind {
        AsymKind::Mle => Ok(std::f64::consts::SQRT_2),
        AsymKind::Wp => Ok(tau2_approx(design, w)?.tau2.sqrt() / w.sum()),
    }
}

/// Standardized estimate `(√n / C)(estimate/(σ₀²θ₀) − 1)`.
pub fn normalize(estimate: f64, psi0: &CovParams, n: usize, c: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalizing constant must be positive, got {c}"
        )));
    }
    Ok((n as f64).sqrt() / c * (estimate / psi0.microergodic() - 1.0))
}
