//! Maximum (pairwise, conditional pairwise, full) likelihood estimation of
//! `(θ, σ²)` over a parameter box.
//!
//! For fixed `θ` every criterion is `A ln σ² + B/σ² + C`, which is
//! unimodal in `σ²` with minimizer `B/A`. The box minimum is therefore found
//! by a one-dimensional search over `θ` of the criterion at
//! `σ̂²(θ) = clamp(B/A, σ²-range)`; [`estimate_joint`] runs the plain
//! two-dimensional search instead.

use crate::error::{Error, Result};
use crate::likelihood::{for_each_weighted_field_pair, objective, profile_slope, profile_terms, ObjectiveKind};
use crate::model::{CorrelationModel, CovParams, FieldSample, Interval, ParamBox, SamplePath, WeightSeq};
use crate::optimize::{minimize_box, ActiveBound, BoxMinimum, MinimizeOptions, Side};

/// A side of the parameter box the estimate lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoxSide {
    ThetaLower,
    ThetaUpper,
    Sigma2Lower,
    Sigma2Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub psi_hat: CovParams,
    /// `θ̂σ̂²`.
    pub microergodic: f64,
    /// Criterion re-evaluated at `psi_hat`.
    pub objective_value: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub active_bounds: Vec<BoxSide>,
}

/// Unconstrained minimizer over `σ² > 0` of the criterion at fixed `θ`.
/// Zero when the data are identically zero.
pub fn profile_sigma2(kind: ObjectiveKind, theta: f64, path: &SamplePath, w: &WeightSeq) -> f64 {
    profile_terms(kind, theta, path, w).argmin()
}

fn check_inputs(kind: ObjectiveKind, path: &SamplePath) -> Result<()> {
    if kind != ObjectiveKind::Full && path.len() < 2 {
        return Err(Error::InvalidDesign(
            "pairwise criteria need at least two points".into(),
        ));
    }
    Ok(())
}

fn theta_side(a: ActiveBound) -> BoxSide {
    match a.side {
        Side::Lower => BoxSide::ThetaLower,
        Side::Upper => BoxSide::ThetaUpper,
    }
}

/// Minimize the selected criterion over `bx`.
pub fn estimate(
    kind: ObjectiveKind,
    path: &SamplePath,
    w: &WeightSeq,
    bx: &ParamBox,
    opts: &MinimizeOptions,
) -> Result<EstimationResult> {
    check_inputs(kind, path)?;
    let sigma2_range = bx.sigma2();
    let floor = opts.ray_bracket.0;
    let sigma2_at = |theta: f64| {
        let t = profile_terms(kind, theta, path, w);
        let s2 = if t.quad > 0.0 {
            sigma2_range.clamp(t.argmin(), floor)
        } else {
            sigma2_range.clamp(0.0, floor)
        };
        (t, s2)
    };
    let profiled = |x: &[f64]| {
        let (t, s2) = sigma2_at(x[0]);
        t.value(s2)
    };
    let m = minimize_box(&profiled, &[bx.theta()], opts)?;
    let mut theta = m.x[0];
    if m.active.is_empty() {
        let slope = |t: f64| profile_slope(kind, t, sigma2_at(t).1, path, w);
        // the search moves downhill until the slope changes sign, so the
        // root found is a local minimum no worse than `theta`
        if let Some(t) = polish_root(&slope, theta, bx.theta()) {
            theta = t;
        }
    }
    let (terms, sigma2) = sigma2_at(theta);
    let degenerate = terms.quad <= 0.0;

    let mut active: Vec<BoxSide> = m.active.iter().copied().map(theta_side).collect();
    if let Interval::Closed { lo, hi } = sigma2_range {
        if sigma2 <= lo {
            active.push(BoxSide::Sigma2Lower);
        }
        if sigma2 >= hi {
            active.push(BoxSide::Sigma2Upper);
        }
    }
    finish(
        kind,
        path,
        w,
        theta,
        sigma2,
        m.evaluations,
        m.converged && !degenerate,
        active,
    )
}

/// Refine an interior minimizer `theta0` of a profiled criterion by locating
/// the sign change of its slope nearby. Values of a criterion that is flat in
/// `θ` only resolve the minimizer to about `sqrt(ε)`; its slope resolves it
/// to nearly full precision. `None` if no sign change is found within a
/// relative distance of `1e-3`.
fn polish_root(slope: &dyn Fn(f64) -> f64, theta0: f64, range: Interval) -> Option<f64> {
    let g0 = slope(theta0);
    if g0 == 0.0 {
        return Some(theta0);
    }
    if !g0.is_finite() {
        return None;
    }
    let inside = |t: f64| match range {
        Interval::Closed { lo, hi } => t > lo && t < hi,
        Interval::PositiveRay => t > 0.0 && t.is_finite(),
    };
    // the root lies towards decreasing θ when the slope is positive
    let dir = if g0 > 0.0 { -1.0 } else { 1.0 };
    let u0 = theta0.ln();
    let mut step = 1e-9;
    let mut near = u0;
    let far = loop {
        if step > 1e-3 {
            return None;
        }
        let u = u0 + dir * step;
        let t = u.exp();
        if !inside(t) {
            return None;
        }
        let g = slope(t);
        if !g.is_finite() {
            return None;
        }
        if g.signum() != g0.signum() {
            break u;
        }
        near = u;
        step *= 4.0;
    };
    let (mut a, mut b) = if dir > 0.0 { (near, far) } else { (far, near) };
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if slope(mid.exp()) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some((0.5 * (a + b)).exp())
}

/// Minimize the selected criterion by a direct two-dimensional search over
/// `(θ, σ²)`, without profiling.
pub fn estimate_joint(
    kind: ObjectiveKind,
    path: &SamplePath,
    w: &WeightSeq,
    bx: &ParamBox,
    opts: &MinimizeOptions,
) -> Result<EstimationResult> {
    check_inputs(kind, path)?;
    let f = |x: &[f64]| match CovParams::new(x[0], x[1]) {
        Ok(psi) => objective(kind, &psi, path, w),
        Err(_) => f64::INFINITY,
    };
    let m: BoxMinimum = minimize_box(&f, &[bx.theta(), bx.sigma2()], opts)?;
    let active = m
        .active
        .iter()
        .map(|a| match (a.dim, a.side) {
            (0, s) => theta_side(ActiveBound { dim: 0, side: s }),
            (_, Side::Lower) => BoxSide::Sigma2Lower,
            (_, Side::Upper) => BoxSide::Sigma2Upper,
        })
        .collect();
    finish(kind, path, w, m.x[0], m.x[1], m.evaluations, m.converged, active)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    kind: ObjectiveKind,
    path: &SamplePath,
    w: &WeightSeq,
    theta: f64,
    sigma2: f64,
    evaluations: usize,
    converged: bool,
    mut active_bounds: Vec<BoxSide>,
) -> Result<EstimationResult> {
    let psi_hat = CovParams::new(theta, sigma2)?;
    active_bounds.sort();
    active_bounds.dedup();
    Ok(EstimationResult {
        psi_hat,
        microergodic: psi_hat.microergodic(),
        objective_value: objective(kind, &psi_hat, path, w),
        evaluations,
        converged,
        active_bounds,
    })
}

/// Weighted pairwise maximum likelihood estimate over `bx`.
pub fn wpmle(path: &SamplePath, w: &WeightSeq, bx: &ParamBox) -> Result<EstimationResult> {
    estimate(ObjectiveKind::Pl, path, w, bx, &MinimizeOptions::default())
}

/// Weighted pairwise conditional maximum likelihood estimate over `bx`.
pub fn wpcmle(path: &SamplePath, w: &WeightSeq, bx: &ParamBox) -> Result<EstimationResult> {
    estimate(ObjectiveKind::Pcl, path, w, bx, &MinimizeOptions::default())
}

/// Full maximum likelihood estimate over `bx`.
pub fn mle(path: &SamplePath, bx: &ParamBox) -> Result<EstimationResult> {
    let unused = WeightSeq::unit(1).expect("unit weights");
    estimate(ObjectiveKind::Full, path, &unused, bx, &MinimizeOptions::default())
}

/// Closed-form minimizer over `σ² > 0` of the weighted pairwise criterion
/// for a field with known correlation:
/// `Σ w_{ij} (Y_i² + Y_j² − 2C_{ij}Y_iY_j)/(1 − C_{ij}²)` divided by `2Σ w_{ij}`.
pub fn variance_wpmle_closed_form(
    sample: &FieldSample,
    corr: &CorrelationModel,
    weight: &dyn Fn(&[f64]) -> f64,
) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for_each_weighted_field_pair(sample, corr, weight, |w, c, yi, yj| {
        num += w * (yi * yi + yj * yj - 2.0 * c * yi * yj) / (1.0 - c * c);
        den += w;
    })?;
    if den <= 0.0 {
        return Err(Error::InvalidWeights("all pair weights are zero".into()));
    }
    Ok(num / (2.0 * den))
}
