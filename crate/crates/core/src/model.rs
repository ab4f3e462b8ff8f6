//! Domain types: covariance parameters, observation designs, lag weights,
//! sample paths, admissible parameter boxes and the general correlation
//! models used for variance-only estimation in one or two dimensions.

use crate::error::{Error, Result};

/// Smallest admissible gap between consecutive design points. Below this the
/// conditional variance `σ²(1 − e^{−2θΔ})` loses all precision.
pub const MIN_SPACING: f64 = 1e-12;

/// Covariance parameters `(θ, σ²)` of `σ² e^{−θ|s−t|}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovParams {
    theta: f64,
    sigma2: f64,
}

impl CovParams {
    pub fn new(theta: f64, sigma2: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must be positive and finite, got {theta}"
            )));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma2 must be positive and finite, got {sigma2}"
            )));
        }
        Ok(Self { theta, sigma2 })
    }

    /// Inverse correlation length.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Process variance.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// The product `σ²θ`, the only consistently estimable functional of the
    /// pair under infill sampling.
    pub fn microergodic(&self) -> f64 {
        self.theta * self.sigma2
    }
}

/// Strictly increasing observation points in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    points: Vec<f64>,
}

impl Design {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDesign("design needs at least one point".into()));
        }
        for (i, &s) in points.iter().enumerate() {
            if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidDesign(format!("point {i} = {s} is outside [0, 1]")));
            }
        }
        for (i, pair) in points.windows(2).enumerate() {
            let gap = pair[1] - pair[0];
            if gap < MIN_SPACING {
                return Err(Error::InvalidDesign(format!(
                    "points {i} and {} are not increasing by at least {MIN_SPACING:e} (gap {gap:e})",
                    i + 1
                )));
            }
        }
        Ok(Self { points })
    }

    /// `n` equispaced points `0, 1/(n−1), …, 1`.
    pub fn equispaced(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDesign(format!("equispaced design needs n >= 2, got {n}")));
        }
        let last = (n - 1) as f64;
        Self::new((0..n).map(|i| i as f64 / last).collect())
    }

    /// The refinement grid `s_{i+1} = s_i + 0.02/L`, `s_1 = 0`, `s_n = 1`,
    /// which has `n = 50L + 1` points.
    pub fn refinement_grid(level: usize) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidDesign("grid level must be at least 1".into()));
        }
        Self::equispaced(50 * level + 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn min_spacing(&self) -> Option<f64> {
        self.spacings().reduce(f64::min)
    }

    /// Consecutive gaps `s_{i+1} − s_i`.
    pub fn spacings(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.windows(2).map(|w| w[1] - w[0])
    }
}

/// Lag weights `w_1, …, w_K` with `w_K > 0`. Pairs `(i, j)` get weight
/// `w_{|i−j|}`, and zero beyond the cutoff `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSeq {
    w: Vec<f64>,
}

impl WeightSeq {
    /// Trailing zeros are dropped so that the last stored weight is positive.
    pub fn new(mut w: Vec<f64>) -> Result<Self> {
        if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weights must be finite and nonnegative, got {bad}"
            )));
        }
        while w.last() == Some(&0.0) {
            w.pop();
        }
        if w.is_empty() {
            return Err(Error::InvalidWeights("at least one weight must be positive".into()));
        }
        Ok(Self { w })
    }

    /// `w_k = 1` for `k ≤ K`.
    pub fn unit(cutoff: usize) -> Result<Self> {
        Self::new(vec![1.0; cutoff])
    }

    pub fn cutoff(&self) -> usize {
        self.w.len()
    }

    /// `w_k` for lag `k ≥ 1`; zero past the cutoff and for `k = 0`.
    pub fn lag(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.w.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn sum(&self) -> f64 {
        self.w.iter().sum()
    }

    /// Weights as a slice, `as_slice()[k - 1] == w_k`.
    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    /// `(k, w_k)` for the nonzero lags below `n`.
    pub(crate) fn active_lags(&self, n: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.w
            .iter()
            .enumerate()
            .map(|(i, &w)| (i + 1, w))
            .filter(move |&(k, w)| w > 0.0 && k < n)
    }

    /// `Σ_{i<j} w_{j−i}` for a design of `n` points.
    pub fn total_pair_weight(&self, n: usize) -> f64 {
        self.active_lags(n).map(|(k, w)| w * (n - k) as f64).sum()
    }
}

/// Observed values `Z(s_1), …, Z(s_n)` on a design.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    design: Design,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(design: Design, values: Vec<f64>) -> Result<Self> {
        if design.len() != values.len() {
            return Err(Error::InvalidDesign(format!(
                "design has {} points but {} values were given",
                design.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample values must be finite, got {bad}"
            )));
        }
        Ok(Self { design, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn points(&self) -> &[f64] {
        self.design.points()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// One side of a search region: a closed interval or the open ray `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interval {
    Closed { lo: f64, hi: f64 },
    PositiveRay,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParameter(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval::Closed { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Interval::Closed { lo, hi } => (lo..=hi).contains(&x),
            Interval::PositiveRay => x > 0.0 && x.is_finite(),
        }
    }

    pub fn is_ray(&self) -> bool {
        matches!(self, Interval::PositiveRay)
    }

    /// Clamp into the interval; a ray only clamps from below at `floor`.
    pub(crate) fn clamp(&self, x: f64, floor: f64) -> f64 {
        match *self {
            Interval::Closed { lo, hi } => x.clamp(lo, hi),
            Interval::PositiveRay => x.max(floor),
        }
    }
}

/// Admissible set `J` for `(θ, σ²)`: a rectangle, or a strip with one
/// side equal to the ray `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBox {
    theta: Interval,
    sigma2: Interval,
}

impl ParamBox {
    pub fn new(theta: Interval, sigma2: Interval) -> Result<Self> {
        if theta.is_ray() && sigma2.is_ray() {
            return Err(Error::InvalidParameter(
                "at most one side of the box may be an open ray".into(),
            ));
        }
        for side in [theta, sigma2] {
            if let Interval::Closed { lo, .. } = side {
                if lo <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "box bounds must be positive, got lower bound {lo}"
                    )));
                }
            }
        }
        Ok(Self { theta, sigma2 })
    }

    /// `[a, b] × [c, d]`.
    pub fn rect(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new(Interval::closed(a, b)?, Interval::closed(c, d)?)
    }

    /// The box `[0.01, 2500] × [0.01, 5]` used in the reference simulation study.
    pub fn reference() -> Self {
        Self::rect(0.01, 2500.0, 0.01, 5.0).expect("reference box is valid")
    }

    /// `{(θ*, σ*²)}`.
    pub fn singleton(psi: CovParams) -> Self {
        Self::rect(psi.theta(), psi.theta(), psi.sigma2(), psi.sigma2()).expect("positive point")
    }

    pub fn theta(&self) -> Interval {
        self.theta
    }

    pub fn sigma2(&self) -> Interval {
        self.sigma2
    }

    pub fn contains(&self, psi: &CovParams) -> bool {
        self.theta.contains(psi.theta()) && self.sigma2.contains(psi.sigma2())
    }

    /// Whether some `(θ, σ²)` in the box has `θσ² = target`.
    pub fn attains_product(&self, target: f64) -> bool {
        match (self.theta, self.sigma2) {
            (Interval::Closed { lo: a, hi: b }, Interval::Closed { lo: c, hi: d }) => {
                a * c <= target && target <= b * d
            }
            _ => target > 0.0,
        }
    }
}

/// Matérn smoothness values with closed-form correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Half,
    ThreeHalves,
    FiveHalves,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrelationKind {
    /// `e^{−θr}`.
    Exponential { theta: f64 },
    /// Matérn with inverse range `θ`: `(1 + θr)e^{−θr}` for ν = 3/2,
    /// `(1 + θr + θ²r²/3)e^{−θr}` for ν = 5/2, and `e^{−θr}` for ν = 1/2.
    Matern { nu: Smoothness, theta: f64 },
}

/// A known isotropic correlation function on `[0, 1]^d`, `d ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationModel {
    kind: CorrelationKind,
    dim: usize,
}

impl CorrelationModel {
    pub fn new(kind: CorrelationKind, dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {dim}")));
        }
        let theta = match kind {
            CorrelationKind::Exponential { theta } | CorrelationKind::Matern { theta, .. } => theta,
        };
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "correlation scale must be positive, got {theta}"
            )));
        }
        Ok(Self { kind, dim })
    }

    pub fn exponential(theta: f64, dim: usize) -> Result<Self> {
        Self::new(CorrelationKind::Exponential { theta }, dim)
    }

    pub fn kind(&self) -> CorrelationKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Correlation at Euclidean distance `r ≥ 0`.
    pub fn at_distance(&self, r: f64) -> f64 {
        match self.kind {
            CorrelationKind::Exponential { theta }
            | CorrelationKind::Matern {
                nu: Smoothness::Half,
                theta,
            } => (-theta * r).exp(),
            CorrelationKind::Matern {
                nu: Smoothness::ThreeHalves,
                theta,
            } => {
                let u = theta * r;
                (1.0 + u) * (-u).exp()
            }
            CorrelationKind::Matern {
                nu: Smoothness::FiveHalves,
                theta,
            } => {
                let u = theta * r;
                (1.0 + u + u * u / 3.0) * (-u).exp()
            }
        }
    }

    /// Correlation at lag vector `h`.
    pub fn at_lag(&self, h: &[f64]) -> f64 {
        self.at_distance(h.iter().map(|x| x * x).sum::<f64>().sqrt())
    }
}

/// Points in `[0, 1]^d` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidDesign(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidDesign(format!("coordinates must be finite, got {bad}")));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_1d(xs: &[f64]) -> Result<Self> {
        Self::new(1, xs.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// The first `n` points.
    pub fn prefix(&self, n: usize) -> PointCloud {
        PointCloud {
            dim: self.dim,
            coords: self.coords[..n.min(self.len()) * self.dim].to_vec(),
        }
    }

    /// `x_j − x_i`.
    pub fn lag(&self, i: usize, j: usize) -> Vec<f64> {
        self.point(j).iter().zip(self.point(i)).map(|(a, b)| a - b).collect()
    }
}

/// Observed values of a field on a point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    points: PointCloud,
    values: Vec<f64>,
}

impl FieldSample {
    pub fn new(points: PointCloud, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::InvalidDesign(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        Ok(Self { points, values })
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The sub-sample on the first `n` points.
    pub fn prefix(&self, n: usize) -> FieldSample {
        let n = n.min(self.len());
        FieldSample {
            points: self.points.prefix(n),
            values: self.values[..n].to_vec(),
        }
    }

    /// The sub-sample on the given point indices, in that order.
    pub fn select(&self, idx: &[usize]) -> FieldSample {
        let dim = self.points.dim();
        let coords = idx.iter().flat_map(|&i| self.points.point(i).iter().copied()).collect();
        FieldSample {
            points: PointCloud { dim, coords },
            values: idx.iter().map(|&i| self.values[i]).collect(),
        }
    }
}
