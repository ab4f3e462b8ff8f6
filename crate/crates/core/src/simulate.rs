//! Exact simulation: the Markov recursion for the exponential covariance in
//! one dimension, and dense Cholesky sampling for general correlations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{CorrelationModel, CovParams, Design, FieldSample, PointCloud, SamplePath};
use crate::rng::RngStream;

/// `σ² e^{−θ|s−t|}`.
pub fn exp_cov(params: &CovParams, s: f64, t: f64) -> f64 {
    params.sigma2() * (-params.theta() * (s - t).abs()).exp()
}

/// Draw `Z(s_1), …, Z(s_n)` exactly: `Z(s_1) ~ N(0, σ²)` and
/// `Z(s_{i+1}) = e^{−θΔ_i} Z(s_i) + ε_i` with
/// `ε_i ~ N(0, σ²(1 − e^{−2θΔ_i}))`.
pub fn simulate_ou(params: &CovParams, design: &Design, rng: &mut RngStream) -> SamplePath {
    let sd = params.sigma2().sqrt();
    let pts = design.points();
    let mut values = Vec::with_capacity(pts.len());
    let mut z = sd * rng.standard_normal();
    values.push(z);
    for gap in design.spacings() {
        let x = params.theta() * gap;
        let rho = (-x).exp();
        let innovation_sd = sd * (-(-2.0 * x).exp_m1()).sqrt();
        z = rho * z + innovation_sd * rng.standard_normal();
        values.push(z);
    }
    SamplePath::new(design.clone(), values).expect("recursion yields finite values")
}

/// Dense covariance matrix `[σ² C(x_i − x_j)]`.
pub fn covariance_matrix(corr: &CorrelationModel, sigma2: f64, points: &PointCloud) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            sigma2
        } else {
            sigma2 * corr.at_lag(&points.lag(i, j))
        }
    })
}

/// Lower Cholesky factor of `cov`, retrying once with `jitter` added to the
/// diagonal.
pub fn cholesky_with_jitter(cov: DMatrix<f64>, jitter: f64) -> Result<DMatrix<f64>> {
    if let Some(ch) = cov.clone().cholesky() {
        return Ok(ch.l());
    }
    let n = cov.nrows();
    let jittered = cov + DMatrix::identity(n, n) * jitter;
    jittered.cholesky().map(|ch| ch.l()).ok_or(Error::NotPositiveDefinite)
}

/// Draw a zero-mean field with covariance `σ² C` at the given points via a
/// dense Cholesky factorization.
pub fn simulate_general(
    corr: &CorrelationModel,
    sigma2: f64,
    points: &PointCloud,
    rng: &mut RngStream,
) -> Result<FieldSample> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    if points.dim() != corr.dim() {
        return Err(Error::InvalidDesign(format!(
            "points have dimension {} but the correlation model has {}",
            points.dim(),
            corr.dim()
        )));
    }
    if has_duplicates(points) {
        return Err(Error::NotPositiveDefinite);
    }
    let l = cholesky_with_jitter(covariance_matrix(corr, sigma2, points), 1e-10 * sigma2)?;
    let eps = DVector::from_fn(points.len(), |_, _| rng.standard_normal());
    let y = l * eps;
    FieldSample::new(points.clone(), y.iter().copied().collect())
}

/// `n` i.i.d. uniform points in `[0, 1]^dim`.
pub fn uniform_points(n: usize, dim: usize, rng: &mut RngStream) -> PointCloud {
    PointCloud::new(dim, (0..n * dim).map(|_| rng.uniform()).collect()).expect("uniform draws are finite")
}

fn has_duplicates(points: &PointCloud) -> bool {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points
            .point(a)
            .partial_cmp(points.point(b))
            .expect("finite coordinates")
    });
    idx.windows(2).any(|w| points.point(w[0]) == points.point(w[1]))
}
