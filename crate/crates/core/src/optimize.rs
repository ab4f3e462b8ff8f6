//! Derivative-free minimization over one- or two-dimensional boxes.
//!
//! Each coordinate is searched in an internal parametrization: logarithmic
//! for closed intervals with a positive lower bound and for the open ray
//! `(0, ∞)`, linear otherwise. A grid of interior starts (16 in 1-D, 8×8 in
//! 2-D) is evaluated first; the most promising discrete local minima are
//! then refined, by Brent's method in 1-D and by Nelder–Mead followed by a
//! coordinate-wise Brent polish in 2-D. Open rays are searched on the
//! bracket `[1e-4, 1e6]`, widened tenfold on the side the optimum sits on,
//! at most three times.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::model::Interval;

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    /// Number of interior starts for one-dimensional problems.
    pub grid_1d: usize,
    /// Starts per axis for two-dimensional problems.
    pub grid_2d: usize,
    /// Absolute objective tolerance.
    pub f_tol: f64,
    /// Step tolerance in the internal coordinates (relative for log axes).
    pub x_tol: f64,
    /// Iteration cap for each local search.
    pub max_iter: usize,
    /// Initial search bracket for open rays.
    pub ray_bracket: (f64, f64),
    pub max_expansions: usize,
    /// Local searches started from the best grid minima.
    pub max_local_searches: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            grid_1d: 16,
            grid_2d: 8,
            f_tol: 1e-10,
            x_tol: 1e-8,
            max_iter: 500,
            ray_bracket: (1e-4, 1e6),
            max_expansions: 3,
            max_local_searches: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Lower,
    Upper,
}

/// A bound the minimizer ended on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActiveBound {
    pub dim: usize,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxMinimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub active: Vec<ActiveBound>,
}

#[derive(Debug, Clone, Copy)]
enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    scale: Scale,
    lo: f64,
    hi: f64,
    ulo: f64,
    uhi: f64,
    ray: bool,
}

impl Axis {
    fn new(interval: Interval, opts: &MinimizeOptions) -> Self {
        match interval {
            Interval::Closed { lo, hi } if lo > 0.0 => Self::log(lo, hi, false),
            Interval::Closed { lo, hi } => Axis {
                scale: Scale::Linear,
                lo,
                hi,
                ulo: lo,
                uhi: hi,
                ray: false,
            },
            Interval::PositiveRay => Self::log(opts.ray_bracket.0, opts.ray_bracket.1, true),
        }
    }

    fn log(lo: f64, hi: f64, ray: bool) -> Self {
        Axis {
            scale: Scale::Log,
            lo,
            hi,
            ulo: lo.ln(),
            uhi: hi.ln(),
            ray,
        }
    }

    fn to_x(self, u: f64) -> f64 {
        if u <= self.ulo {
            return self.lo;
        }
        if u >= self.uhi {
            return self.hi;
        }
        match self.scale {
            Scale::Linear => u,
            Scale::Log => u.exp().clamp(self.lo, self.hi),
        }
    }

    fn width(&self) -> f64 {
        self.uhi - self.ulo
    }

    fn is_point(&self) -> bool {
        self.ulo == self.uhi
    }

    fn clamp(&self, u: f64) -> f64 {
        u.clamp(self.ulo, self.uhi)
    }

    fn expand(&mut self, side: Side) {
        match side {
            Side::Lower => self.lo /= 10.0,
            Side::Upper => self.hi *= 10.0,
        }
        *self = Self::log(self.lo, self.hi, true);
    }
}

struct Counted<'a> {
    f: &'a dyn Fn(&[f64]) -> f64,
    axes: Vec<Axis>,
    evals: Cell<usize>,
}

impl Counted<'_> {
    fn eval_u(&self, u: &[f64]) -> f64 {
        let x: Vec<f64> = u.iter().zip(&self.axes).map(|(&ui, a)| a.to_x(ui)).collect();
        self.evals.set(self.evals.get() + 1);
        (self.f)(&x)
    }

    fn eval_start(&self, u: &[f64]) -> Result<f64> {
        let v = self.eval_u(u);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(
                u.iter().zip(&self.axes).map(|(&ui, a)| a.to_x(ui)).collect(),
            ))
        }
    }
}

/// Non-finite values are treated as worse than anything finite.
fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimize `f` over the box given by `bounds` (one or two intervals).
pub fn minimize_box(f: &dyn Fn(&[f64]) -> f64, bounds: &[Interval], opts: &MinimizeOptions) -> Result<BoxMinimum> {
    if bounds.is_empty() || bounds.len() > 2 {
        return Err(Error::InvalidParameter(format!(
            "minimize_box handles one or two dimensions, got {}",
            bounds.len()
        )));
    }
    let mut problem = Counted {
        f,
        axes: bounds.iter().map(|&b| Axis::new(b, opts)).collect(),
        evals: Cell::new(0),
    };
    let mut expansions = 0;
    loop {
        let (u, value, converged) = search(&problem, opts)?;
        let mut hit = None;
        for (d, axis) in problem.axes.iter().enumerate() {
            if !axis.ray {
                continue;
            }
            let edge_tol = 10.0 * opts.x_tol;
            if u[d] - axis.ulo <= edge_tol {
                hit = Some((d, Side::Lower));
            } else if axis.uhi - u[d] <= edge_tol {
                hit = Some((d, Side::Upper));
            }
        }
        match hit {
            Some((d, side)) => {
                if expansions == opts.max_expansions {
                    return Err(Error::BracketExhausted(expansions));
                }
                expansions += 1;
                problem.axes[d].expand(side);
            }
            None => {
                let x: Vec<f64> = u.iter().zip(&problem.axes).map(|(&ui, a)| a.to_x(ui)).collect();
                let mut active = Vec::new();
                for (d, axis) in problem.axes.iter().enumerate() {
                    if axis.ray {
                        continue;
                    }
                    if u[d] - axis.ulo <= opts.x_tol {
                        active.push(ActiveBound {
                            dim: d,
                            side: Side::Lower,
                        });
                    }
                    if axis.uhi - u[d] <= opts.x_tol {
                        active.push(ActiveBound {
                            dim: d,
                            side: Side::Upper,
                        });
                    }
                }
                return Ok(BoxMinimum {
                    x,
                    value,
                    evaluations: problem.evals.get(),
                    converged,
                    active,
                });
            }
        }
    }
}

fn search(p: &Counted<'_>, opts: &MinimizeOptions) -> Result<(Vec<f64>, f64, bool)> {
    let free: Vec<usize> = (0..p.axes.len()).filter(|&d| !p.axes[d].is_point()).collect();
    let base: Vec<f64> = p.axes.iter().map(|a| a.ulo).collect();
    match free.len() {
        0 => Ok((base.clone(), p.eval_start(&base)?, true)),
        1 => {
            let d = free[0];
            let line = |t: f64| {
                let mut u = base.clone();
                u[d] = t;
                u
            };
            let (t, v, ok) = search_1d(&|t| sanitize(p.eval_u(&line(t))), &p.axes[d], opts, &|t| {
                p.eval_start(&line(t))
            })?;
            Ok((line(t), v, ok))
        }
        _ => search_2d(p, opts),
    }
}

fn search_1d(
    f: &dyn Fn(f64) -> f64,
    axis: &Axis,
    opts: &MinimizeOptions,
    start: &dyn Fn(f64) -> Result<f64>,
) -> Result<(f64, f64, bool)> {
    let m = opts.grid_1d.max(1);
    let mut nodes = Vec::with_capacity(m + 2);
    nodes.push(axis.ulo);
    for i in 0..m {
        nodes.push(axis.ulo + (i as f64 + 0.5) / m as f64 * axis.width());
    }
    nodes.push(axis.uhi);
    let values = nodes.iter().map(|&t| start(t)).collect::<Result<Vec<f64>>>()?;

    let mut minima: Vec<usize> = (0..nodes.len())
        .filter(|&i| (i == 0 || values[i] <= values[i - 1]) && (i + 1 == nodes.len() || values[i] <= values[i + 1]))
        .collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    minima.truncate(opts.max_local_searches.max(1));

    let mut best = (f64::NAN, f64::INFINITY, true);
    for &i in &minima {
        let lo = nodes[i.saturating_sub(1)];
        let hi = nodes[(i + 1).min(nodes.len() - 1)];
        let mut cand = brent(f, lo, hi, nodes[i], values[i], opts);
        // the bracket ends are exact bounds only at the extreme nodes
        for &(edge, v) in &[
            (nodes[0], values[0]),
            (nodes[nodes.len() - 1], values[values.len() - 1]),
        ] {
            if (edge == lo || edge == hi) && v <= cand.1 {
                cand = (edge, v, cand.2);
            }
        }
        if better(cand.1, cand.0, best.1, best.0) {
            best = cand;
        }
    }
    Ok(best)
}

fn better(v: f64, x: f64, best_v: f64, best_x: f64) -> bool {
    v < best_v || (v == best_v && x < best_x) || best_x.is_nan()
}

/// Brent's parabolic-interpolation line search on `[a, b]` from `x0`.
fn brent(f: &dyn Fn(f64) -> f64, a: f64, b: f64, x0: f64, f0: f64, opts: &MinimizeOptions) -> (f64, f64, bool) {
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a.min(b), a.max(b));
    if b - a <= opts.x_tol {
        return (x0, f0, true);
    }
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..opts.max_iter {
        let mid = 0.5 * (a + b);
        let tol1 = f64::EPSILON.sqrt() * x.abs() * 0.1 + opts.x_tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            return (x, fx, true);
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if mid >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= mid { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx, false)
}

fn search_2d(p: &Counted<'_>, opts: &MinimizeOptions) -> Result<(Vec<f64>, f64, bool)> {
    let g = opts.grid_2d.max(1);
    let cell: Vec<f64> = p.axes.iter().map(|a| a.width() / g as f64).collect();
    let coord = |d: usize, i: usize| p.axes[d].ulo + (i as f64 + 0.5) * cell[d];
    let mut grid = vec![0.0; g * g];
    for i in 0..g {
        for j in 0..g {
            grid[i * g + j] = p.eval_start(&[coord(0, i), coord(1, j)])?;
        }
    }
    let is_local_min = |i: usize, j: usize| {
        let v = grid[i * g + j];
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if (di, dj) != (0, 0)
                    && (0..g as i64).contains(&ni)
                    && (0..g as i64).contains(&nj)
                    && grid[ni as usize * g + nj as usize] < v
                {
                    return false;
                }
            }
        }
        true
    };
    let mut starts: Vec<(usize, usize)> = (0..g)
        .flat_map(|i| (0..g).map(move |j| (i, j)))
        .filter(|&(i, j)| is_local_min(i, j))
        .collect();
    starts.sort_by(|a, b| grid[a.0 * g + a.1].total_cmp(&grid[b.0 * g + b.1]).then(a.cmp(b)));
    starts.truncate(opts.max_local_searches.max(1));

    let f = |u: &[f64]| sanitize(p.eval_u(u));
    let mut best: (Vec<f64>, f64, bool) = (vec![f64::NAN; 2], f64::INFINITY, true);
    for (i, j) in starts {
        let u0 = [coord(0, i), coord(1, j)];
        let cand = local_2d(&f, &p.axes, u0, grid[i * g + j], &cell, opts);
        if better(cand.1, cand.0[0], best.1, best.0[0]) {
            best = cand;
        }
    }
    Ok(best)
}

/// Nelder–Mead with restarts, then coordinate-wise Brent and a check of the
/// bounds along each coordinate.
fn local_2d(
    f: &dyn Fn(&[f64]) -> f64,
    axes: &[Axis],
    u0: [f64; 2],
    f0: f64,
    cell: &[f64],
    opts: &MinimizeOptions,
) -> (Vec<f64>, f64, bool) {
    let mut u = u0;
    let mut fu = f0;
    let mut converged = false;
    let mut step = [cell[0] / 2.0, cell[1] / 2.0];
    for _ in 0..8 {
        let (nu, nf, ok) = nelder_mead(f, axes, u, fu, step, opts);
        let improvement = fu - nf;
        u = nu;
        fu = nf;
        converged = ok;
        if improvement <= opts.f_tol {
            break;
        }
        step = [step[0] / 4.0, step[1] / 4.0];
    }
    for _round in 0..4 {
        let before = fu;
        for d in 0..2 {
            let h = (cell[d] / 64.0).max(10.0 * opts.x_tol);
            let (lo, hi) = (axes[d].clamp(u[d] - h), axes[d].clamp(u[d] + h));
            let base = u;
            let line = |t: f64| {
                let mut v = base;
                v[d] = t;
                f(&v)
            };
            let (t, ft, _) = brent(&line, lo, hi, u[d], fu, opts);
            if ft <= fu {
                u[d] = t;
                fu = ft;
            }
            for edge in [axes[d].ulo, axes[d].uhi] {
                let fe = line(edge);
                if fe <= fu {
                    u[d] = edge;
                    fu = fe;
                }
            }
        }
        if before - fu <= opts.f_tol {
            break;
        }
    }
    (u.to_vec(), fu, converged)
}

fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    axes: &[Axis],
    u0: [f64; 2],
    f0: f64,
    step: [f64; 2],
    opts: &MinimizeOptions,
) -> ([f64; 2], f64, bool) {
    let project = |u: [f64; 2]| [axes[0].clamp(u[0]), axes[1].clamp(u[1])];
    let offset = |d: usize| {
        let mut u = u0;
        // step inward when the start is too close to the upper bound
        u[d] = if u0[d] + step[d] <= axes[d].uhi {
            u0[d] + step[d]
        } else {
            u0[d] - step[d]
        };
        project(u)
    };
    let mut simplex: Vec<([f64; 2], f64)> = vec![(u0, f0)];
    for d in 0..2 {
        let u = offset(d);
        simplex.push((u, f(&u)));
    }
    let combine = |a: [f64; 2], b: [f64; 2], t: f64| project([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    for _ in 0..opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0[0].total_cmp(&b.0[0])));
        let (best, worst) = (simplex[0], simplex[2]);
        let f_spread = worst.1 - best.1;
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(u, _)| [(u[0] - best.0[0]).abs(), (u[1] - best.0[1]).abs()])
            .fold(0.0, f64::max);
        if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
            return (best.0, best.1, true);
        }
        let centroid = [
            (simplex[0].0[0] + simplex[1].0[0]) / 2.0,
            (simplex[0].0[1] + simplex[1].0[1]) / 2.0,
        ];
        let refl = combine(centroid, worst.0, -1.0);
        let f_refl = f(&refl);
        if f_refl < best.1 {
            let exp = combine(centroid, worst.0, -2.0);
            let f_exp = f(&exp);
            simplex[2] = if f_exp < f_refl { (exp, f_exp) } else { (refl, f_refl) };
        } else if f_refl < simplex[1].1 {
            simplex[2] = (refl, f_refl);
        } else {
            let (contr, f_contr) = if f_refl < worst.1 {
                let c = combine(centroid, refl, 0.5);
                (c, f(&c))
            } else {
                let c = combine(centroid, worst.0, 0.5);
                (c, f(&c))
            };
            if f_contr < worst.1.min(f_refl) {
                simplex[2] = (contr, f_contr);
            } else {
                for v in simplex.iter_mut().skip(1) {
                    let u = combine(best.0, v.0, 0.5);
                    *v = (u, f(&u));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1, false)
}
