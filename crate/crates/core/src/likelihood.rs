//! Likelihood criteria, all on the `−2 log density` scale with the
//! `ln(2π)` constants dropped.
//!
//! For a lag `Δ` write `ρ = e^{−θΔ}`. The bivariate criterion of
//! `(Z(s), Z(t))` is
//!
//! ```text
//! ℓ_{s,t}(ψ) = 2 ln σ² + ln(1 − ρ²) + Z(s)²/σ² + (Z(t) − ρZ(s))² / (σ²(1 − ρ²))
//! ```
//!
//! and the conditional criterion of `Z(t)` given `Z(s)` drops the marginal
//! part: `ℓ_{t|s} = ln σ² + ln(1 − ρ²) + (Z(t) − ρZ(s))² / (σ²(1 − ρ²))`.
//! The weighted pairwise criteria sum these over pairs `i < j` with weight
//! `w_{j−i}`; the conditional version counts both conditioning directions.
//!
//! Every criterion here has the form `A ln σ² + B(θ)/σ² + C(θ)`, which is
//! what [`ProfileTerms`] exposes for closed-form profiling over `σ²`.
//!
//! `1 − ρ` and `1 − ρ²` are always formed with `expm1`, and innovations
//! `Z(t) − ρZ(s)` as `(Z(t) − Z(s)) + (1 − ρ)Z(s)`, so nothing cancels when
//! `θΔ` is tiny.

use crate::error::{Error, Result};
use crate::model::{CorrelationModel, CovParams, FieldSample, SamplePath, WeightSeq, MIN_SPACING};

/// Which criterion to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    /// Weighted pairwise likelihood.
    Pl,
    /// Weighted pairwise conditional likelihood.
    Pcl,
    /// Full Gaussian likelihood (weights unused).
    Full,
}

#[derive(Debug, Clone, Copy)]
struct LagFactors {
    rho: f64,
    one_minus_rho: f64,
    one_minus_rho2: f64,
}

impl LagFactors {
    #[inline]
    fn new(theta: f64, gap: f64) -> Self {
        let x = theta * gap;
        Self {
            rho: (-x).exp(),
            one_minus_rho: -(-x).exp_m1(),
            one_minus_rho2: -(-2.0 * x).exp_m1(),
        }
    }

    /// `zt − ρ zs`.
    #[inline]
    fn innovation(&self, zs: f64, zt: f64) -> f64 {
        (zt - zs) + self.one_minus_rho * zs
    }
}

fn check_gap(s: f64, t: f64) -> Result<f64> {
    let gap = (s - t).abs();
    if gap < MIN_SPACING {
        return Err(Error::DegeneratePair(format!(
            "points {s} and {t} are closer than {MIN_SPACING:e}"
        )));
    }
    Ok(gap)
}

#[inline]
fn pair_term(psi: &CovParams, gap: f64, zs: f64, zt: f64) -> f64 {
    let f = LagFactors::new(psi.theta(), gap);
    let s2 = psi.sigma2();
    let e = f.innovation(zs, zt);
    2.0 * s2.ln() + f.one_minus_rho2.ln() + zs * zs / s2 + e * e / (s2 * f.one_minus_rho2)
}

#[inline]
fn cond_term(psi: &CovParams, gap: f64, zs: f64, zt: f64) -> f64 {
    let f = LagFactors::new(psi.theta(), gap);
    let s2 = psi.sigma2();
    let e = f.innovation(zs, zt);
    s2.ln() + f.one_minus_rho2.ln() + e * e / (s2 * f.one_minus_rho2)
}

/// Bivariate criterion `ℓ_{s,t}(ψ)`.
pub fn pair_loglik(psi: &CovParams, s: f64, t: f64, zs: f64, zt: f64) -> Result<f64> {
    Ok(pair_term(psi, check_gap(s, t)?, zs, zt))
}

/// Conditional criterion `ℓ_{t|s}(ψ)` of `Z(t)` given `Z(s)`.
pub fn cond_pair_loglik(psi: &CovParams, s: f64, t: f64, zs: f64, zt: f64) -> Result<f64> {
    Ok(cond_term(psi, check_gap(s, t)?, zs, zt))
}

/// Weighted pairwise criterion summed pair by pair, `O(nK)`.
pub fn pl_direct(psi: &CovParams, path: &SamplePath, w: &WeightSeq) -> f64 {
    let (s, z) = (path.points(), path.values());
    let n = z.len();
    let mut total = 0.0;
    for i in 0..n {
        for (k, wk) in w.active_lags(n - i) {
            let j = i + k;
            total += wk * pair_term(psi, s[j] - s[i], z[i], z[j]);
        }
    }
    total
}

/// Weighted pairwise conditional criterion, `Σ_{i≠j} w_{|i−j|} ℓ_{s_j|s_i}`.
pub fn pcl_direct(psi: &CovParams, path: &SamplePath, w: &WeightSeq) -> f64 {
    let (s, z) = (path.points(), path.values());
    let n = z.len();
    let mut total = 0.0;
    for i in 0..n {
        for (k, wk) in w.active_lags(n - i) {
            let j = i + k;
            let gap = s[j] - s[i];
            total += wk * (cond_term(psi, gap, z[i], z[j]) + cond_term(psi, gap, z[j], z[i]));
        }
    }
    total
}

/// Visit the lag-`k` pairs grouped by residue class: for each offset
/// `a < k` the subsequence `s_a, s_{a+k}, s_{a+2k}, …` contributes its
/// consecutive pairs.
fn for_each_strided_pair(n: usize, w: &WeightSeq, mut visit: impl FnMut(f64, usize, usize)) {
    for (k, wk) in w.active_lags(n) {
        for a in 0..k {
            // number of consecutive pairs in the subsequence, floor((n−1−a−k)/k) + 1
            let last = (n as isize - 1 - a as isize - k as isize).div_euclid(k as isize);
            for j in 0..=last {
                let lo = a + j as usize * k;
                visit(wk, lo, lo + k);
            }
        }
    }
}

/// [`pl_direct`] evaluated through the residue-class reindexing of the pairs.
pub fn pl_reindexed(psi: &CovParams, path: &SamplePath, w: &WeightSeq) -> f64 {
    let (s, z) = (path.points(), path.values());
    let mut total = 0.0;
    for_each_strided_pair(z.len(), w, |wk, i, j| {
        total += wk * pair_term(psi, s[j] - s[i], z[i], z[j]);
    });
    total
}

/// [`pcl_direct`] evaluated through the residue-class reindexing of the pairs.
pub fn pcl_reindexed(psi: &CovParams, path: &SamplePath, w: &WeightSeq) -> f64 {
    let (s, z) = (path.points(), path.values());
    let mut total = 0.0;
    for_each_strided_pair(z.len(), w, |wk, i, j| {
        let gap = s[j] - s[i];
        total += wk * (cond_term(psi, gap, z[i], z[j]) + cond_term(psi, gap, z[j], z[i]));
    });
    total
}

/// Full criterion `−2 log N(Z; 0, Σ(ψ)) − n ln 2π` in `O(n)` through the
/// Markov factorization `p(z_1) Π p(z_i | z_{i−1})`.
pub fn full_neg2_loglik(psi: &CovParams, path: &SamplePath) -> f64 {
    let (s, z) = (path.points(), path.values());
    let s2 = psi.sigma2();
    let mut total = s2.ln() + z[0] * z[0] / s2;
    for i in 1..z.len() {
        total += cond_term(psi, s[i] - s[i - 1], z[i - 1], z[i]);
    }
    total
}

/// Evaluate the selected criterion.
pub fn objective(kind: ObjectiveKind, psi: &CovParams, path: &SamplePath, w: &WeightSeq) -> f64 {
    match kind {
        ObjectiveKind::Pl => pl_direct(psi, path, w),
        ObjectiveKind::Pcl => pcl_direct(psi, path, w),
        ObjectiveKind::Full => full_neg2_loglik(psi, path),
    }
}

/// Coefficients of a criterion at fixed `θ` as a function of `σ²`:
/// `value(σ²) = log_coef · ln σ² + quad / σ² + rest`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileTerms {
    pub log_coef: f64,
    pub quad: f64,
    pub rest: f64,
}

impl ProfileTerms {
    pub fn value(&self, sigma2: f64) -> f64 {
        self.log_coef * sigma2.ln() + self.quad / sigma2 + self.rest
    }

    /// Unconstrained minimizer `quad / log_coef` over `σ² > 0`; zero when
    /// the data are identically zero.
    pub fn argmin(&self) -> f64 {
        self.quad / self.log_coef
    }
}

/// [`ProfileTerms`] for the exponential-model criteria at scale `theta`.
pub fn profile_terms(kind: ObjectiveKind, theta: f64, path: &SamplePath, w: &WeightSeq) -> ProfileTerms {
    let (s, z) = (path.points(), path.values());
    let n = z.len();
    let mut t = ProfileTerms {
        log_coef: 0.0,
        quad: 0.0,
        rest: 0.0,
    };
    match kind {
        ObjectiveKind::Full => {
            t.log_coef = n as f64;
            t.quad = z[0] * z[0];
            for i in 1..n {
                let f = LagFactors::new(theta, s[i] - s[i - 1]);
                let e = f.innovation(z[i - 1], z[i]);
                t.quad += e * e / f.one_minus_rho2;
                t.rest += f.one_minus_rho2.ln();
            }
        }
        ObjectiveKind::Pl => {
            for i in 0..n {
                for (k, wk) in w.active_lags(n - i) {
                    let j = i + k;
                    let f = LagFactors::new(theta, s[j] - s[i]);
                    let d = z[j] - z[i];
                    // z_i² + z_j² − 2ρ z_i z_j, rearranged
                    let q = d * d + 2.0 * f.one_minus_rho * z[i] * z[j];
                    t.log_coef += 2.0 * wk;
                    t.quad += wk * q / f.one_minus_rho2;
                    t.rest += wk * f.one_minus_rho2.ln();
                }
            }
        }
        ObjectiveKind::Pcl => {
            for i in 0..n {
                for (k, wk) in w.active_lags(n - i) {
                    let j = i + k;
                    let f = LagFactors::new(theta, s[j] - s[i]);
                    let fwd = f.innovation(z[i], z[j]);
                    let bwd = f.innovation(z[j], z[i]);
                    t.log_coef += 2.0 * wk;
                    t.quad += wk * (fwd * fwd + bwd * bwd) / f.one_minus_rho2;
                    t.rest += 2.0 * wk * f.one_minus_rho2.ln();
                }
            }
        }
    }
    t
}

/// Derivative in `θ` of `quad(θ)/σ² + rest(θ)` at fixed `σ²`. At
/// `σ² = clamp(quad/log_coef)` this is also the derivative of the profiled
/// criterion, since the `σ²`-derivative vanishes or `σ²` is locally fixed.
///
/// With `ρ' = −Δρ`: `(1 − ρ²)' = 2Δρ²`, and every quadratic term
/// differentiates to `2Δρ · (forward innovation) · (backward innovation) / (1 − ρ²)²`
/// except the conditional one, handled separately.
pub fn profile_slope(kind: ObjectiveKind, theta: f64, sigma2: f64, path: &SamplePath, w: &WeightSeq) -> f64 {
    let (s, z) = (path.points(), path.values());
    let n = z.len();
    let (mut dquad, mut drest) = (0.0, 0.0);
    let mut visit = |wk: f64, gap: f64, zi: f64, zj: f64, kind: ObjectiveKind| {
        let f = LagFactors::new(theta, gap);
        let rho = f.rho;
        let fwd = f.innovation(zi, zj);
        let bwd = f.innovation(zj, zi);
        let den = f.one_minus_rho2 * f.one_minus_rho2;
        let dlog = 2.0 * gap * rho * rho / f.one_minus_rho2;
        match kind {
            ObjectiveKind::Pl | ObjectiveKind::Full => {
                dquad += wk * 2.0 * gap * rho * fwd * bwd / den;
                drest += wk * dlog;
            }
            ObjectiveKind::Pcl => {
                let cross = (fwd * zi + bwd * zj) * f.one_minus_rho2 - (fwd * fwd + bwd * bwd) * rho;
                dquad += wk * 2.0 * gap * rho * cross / den;
                drest += 2.0 * wk * dlog;
            }
        }
    };
    match kind {
        ObjectiveKind::Full => {
            for i in 1..n {
                visit(1.0, s[i] - s[i - 1], z[i - 1], z[i], kind);
            }
        }
        _ => {
            for i in 0..n {
                for (k, wk) in w.active_lags(n - i) {
                    visit(wk, s[i + k] - s[i], z[i], z[i + k], kind);
                }
            }
        }
    }
    dquad / sigma2 + drest
}

/// Bivariate criterion for a field with known correlation `C` and unknown
/// variance, at correlation value `c = C(x_i − x_j)`.
fn general_pair_term(sigma2: f64, c: f64, yi: f64, yj: f64) -> f64 {
    let one_minus_c2 = 1.0 - c * c;
    let e = yj - c * yi;
    2.0 * sigma2.ln() + one_minus_c2.ln() + yi * yi / sigma2 + e * e / (sigma2 * one_minus_c2)
}

/// Visit every pair `i < j` with nonzero weight `g(x_j − x_i)` together with
/// its correlation, failing on correlations too close to `±1`.
pub(crate) fn for_each_weighted_field_pair(
    sample: &FieldSample,
    corr: &CorrelationModel,
    weight: &dyn Fn(&[f64]) -> f64,
    mut visit: impl FnMut(f64, f64, f64, f64),
) -> Result<()> {
    let pts = sample.points();
    let y = sample.values();
    if pts.dim() != corr.dim() {
        return Err(Error::InvalidDesign(format!(
            "points have dimension {} but the correlation model has {}",
            pts.dim(),
            corr.dim()
        )));
    }
    for i in 0..y.len() {
        for j in (i + 1)..y.len() {
            let lag = pts.lag(i, j);
            let wij = weight(&lag);
            if wij == 0.0 {
                continue;
            }
            if !(wij.is_finite() && wij > 0.0) {
                return Err(Error::InvalidWeights(format!(
                    "pair weight must be nonnegative, got {wij}"
                )));
            }
            let c = corr.at_lag(&lag);
            if c.abs() >= 1.0 - 1e-12 {
                return Err(Error::DegeneratePair(format!(
                    "correlation {c} between points {i} and {j}"
                )));
            }
            visit(wij, c, y[i], y[j]);
        }
    }
    Ok(())
}

/// Weighted pairwise criterion for the variance of a field with known
/// correlation, `Σ_{i<j} g(x_j − x_i) ℓ_{C, x_i, x_j}(σ²)`.
pub fn pl_general(
    sigma2: f64,
    sample: &FieldSample,
    corr: &CorrelationModel,
    weight: &dyn Fn(&[f64]) -> f64,
) -> Result<f64> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    let mut total = 0.0;
    for_each_weighted_field_pair(sample, corr, weight, |w, c, yi, yj| {
        total += w * general_pair_term(sigma2, c, yi, yj);
    })?;
    Ok(total)
}
