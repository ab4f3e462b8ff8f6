//! Replicated Monte Carlo experiments.
//!
//! Replication `r` of sample size `n` draws from the stream
//! `RngStream::tagged(base_seed, n, r)`, so every estimator (and every
//! weight cutoff) sees the same paths, and results do not depend on the
//! thread count or completion order.

pub mod report;
pub mod summary;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::asymptotics::{asymptotic_variance, normalize, normalizing_constant, AsymKind};
use crate::error::{Error, Result};
use crate::estimate::{estimate, variance_wpmle_closed_form};
use crate::likelihood::ObjectiveKind;
use crate::model::{
    CorrelationModel, CovParams, Design, FieldSample, Interval, ParamBox, PointCloud, SamplePath, WeightSeq,
};
use crate::optimize::MinimizeOptions;
use crate::rng::RngStream;
use crate::simulate::{simulate_general, simulate_ou, uniform_points};

pub use summary::{rmse, summarize, summarize_any, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Standardized distribution of the estimates of `θσ²`.
    Standardized,
    /// Asymptotic against sample variance over several weight cutoffs.
    Cutoffs,
    /// Box `[a, b] × (0, ∞)`.
    CaseIii,
    /// Box `[a, b] × [c, d]` with `ad` above the true product.
    CaseI,
    /// Box `(0, ∞) × [c, d]`.
    CaseIv,
    /// Variance-only estimation with known correlation at random points.
    VarianceOnly,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Standardized,
        Scenario::Cutoffs,
        Scenario::CaseIii,
        Scenario::CaseI,
        Scenario::CaseIv,
        Scenario::VarianceOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Standardized => "table1",
            Scenario::Cutoffs => "table2",
            Scenario::CaseIii => "case-iii",
            Scenario::CaseI => "case-i",
            Scenario::CaseIv => "case-iv",
            Scenario::VarianceOnly => "appendix-b",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Mle,
    Wpmle,
    Wpcmle,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Mle => "MLE",
            EstimatorKind::Wpmle => "WPMLE",
            EstimatorKind::Wpcmle => "WPCMLE",
        }
    }

    fn objective(self) -> ObjectiveKind {
        match self {
            EstimatorKind::Mle => ObjectiveKind::Full,
            EstimatorKind::Wpmle => ObjectiveKind::Pl,
            EstimatorKind::Wpcmle => ObjectiveKind::Pcl,
        }
    }

    fn asym(self) -> AsymKind {
        match self {
            EstimatorKind::Mle => AsymKind::Mle,
            _ => AsymKind::Wp,
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Ok(EstimatorKind::Mle),
            "wpmle" => Ok(EstimatorKind::Wpmle),
            "wpcmle" => Ok(EstimatorKind::Wpcmle),
            _ => Err(Error::Config(format!("unknown estimator '{s}'"))),
        }
    }
}

/// Settings of the variance-only experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceOnlyConfig {
    pub correlation: CorrelationModel,
    /// Number of fixed paths in the path-wise stabilization check (0 skips it).
    pub check_paths: usize,
    /// Size of the coarse design in the path-wise check; the fine design
    /// has twice as many points and contains it.
    pub check_n: usize,
}

impl Default for VarianceOnlyConfig {
    fn default() -> Self {
        Self {
            correlation: CorrelationModel::exponential(15.0, 1).expect("valid model"),
            check_paths: 20,
            check_n: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n_list: Vec<usize>,
    /// Weight cutoffs swept by [`Scenario::Cutoffs`], with unit weights.
    pub k_list: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    pub psi0: CovParams,
    pub weights: WeightSeq,
    pub param_box: ParamBox,
    pub estimators: Vec<EstimatorKind>,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
    pub variance_only: VarianceOnlyConfig,
    pub minimize: MinimizeOptions,
}

impl ExperimentConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        use EstimatorKind::*;
        let unit = |k| WeightSeq::unit(k).expect("unit weights");
        let mut cfg = Self {
            scenario,
            n_list: vec![51, 101, 201, 401, 801],
            k_list: vec![1],
            replications: 1000,
            base_seed: 42,
            psi0: CovParams::new(15.0, 1.0).expect("valid parameters"),
            weights: unit(1),
            param_box: ParamBox::reference(),
            estimators: vec![Mle, Wpmle, Wpcmle],
            threads: 0,
            variance_only: VarianceOnlyConfig::default(),
            minimize: MinimizeOptions::default(),
        };
        match scenario {
            Scenario::Standardized => {}
            Scenario::Cutoffs => cfg.k_list = vec![1, 10, 20, 30],
            Scenario::CaseIii => {
                cfg.replications = 500;
                cfg.weights = unit(2);
                cfg.param_box =
                    ParamBox::new(Interval::Closed { lo: 14.0, hi: 16.0 }, Interval::PositiveRay).expect("valid box");
                cfg.estimators = vec![Wpmle, Wpcmle];
            }
            Scenario::CaseI => {
                cfg.replications = 500;
                cfg.weights = unit(2);
                cfg.param_box = ParamBox::rect(20.0, 30.0, 0.1, 2.0).expect("valid box");
                cfg.estimators = vec![Wpmle, Wpcmle];
            }
            Scenario::CaseIv => {
                cfg.replications = 500;
                cfg.param_box =
                    ParamBox::new(Interval::PositiveRay, Interval::Closed { lo: 0.01, hi: 5.0 }).expect("valid box");
                cfg.estimators = vec![Wpmle, Mle];
            }
            Scenario::VarianceOnly => {
                cfg.n_list = vec![50, 100, 200, 400];
                cfg.replications = 2000;
                cfg.estimators = vec![];
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list must not be empty".into()));
        }
        if self.scenario == Scenario::VarianceOnly {
            if self.n_list.iter().any(|&n| n < 2) {
                return Err(Error::Config("appendix-b sample sizes must be at least 2".into()));
            }
            if self.variance_only.check_paths > 0 && self.variance_only.check_n < 2 {
                return Err(Error::Config("path-wise check needs at least 2 points".into()));
            }
            return Ok(());
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators selected".into()));
        }
        let cutoff = match self.scenario {
            Scenario::Cutoffs => {
                if self.k_list.is_empty() || self.k_list.contains(&0) {
                    return Err(Error::Config("k_list must hold positive cutoffs".into()));
                }
                *self.k_list.iter().max().expect("nonempty")
            }
            _ => self.weights.cutoff(),
        };
        if let Some(&n) = self.n_list.iter().find(|&&n| n <= cutoff || n < 2) {
            return Err(Error::Config(format!(
                "sample size {n} must exceed the weight cutoff {cutoff}"
            )));
        }
        Ok(())
    }

    /// Set one field from a `key=value` pair as used in config files and
    /// command-line overrides.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} '{value}'"));
        match key {
            "scenario" => self.scenario = value.parse()?,
            "reps" | "replications" => self.replications = value.parse().map_err(|_| bad(key))?,
            "seed" => self.base_seed = value.parse().map_err(|_| bad(key))?,
            "threads" => self.threads = value.parse().map_err(|_| bad(key))?,
            "n" | "n_list" => self.n_list = parse_list(value).map_err(|_| bad(key))?,
            "k_list" => self.k_list = parse_list(value).map_err(|_| bad(key))?,
            "K" | "k" => {
                let k: usize = value.parse().map_err(|_| bad(key))?;
                self.weights = WeightSeq::unit(k)?;
                self.k_list = vec![k];
            }
            "weights" => self.weights = WeightSeq::new(parse_list(value).map_err(|_| bad(key))?)?,
            "theta0" => self.psi0 = CovParams::new(value.parse().map_err(|_| bad(key))?, self.psi0.sigma2())?,
            "sigma20" => self.psi0 = CovParams::new(self.psi0.theta(), value.parse().map_err(|_| bad(key))?)?,
            "box" => self.param_box = parse_box(value)?,
            "estimators" => {
                self.estimators = value.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?;
            }
            "check_paths" => self.variance_only.check_paths = value.parse().map_err(|_| bad(key))?,
            "check_n" => self.variance_only.check_n = value.parse().map_err(|_| bad(key))?,
            "corr_theta" => {
                let dim = self.variance_only.correlation.dim();
                self.variance_only.correlation =
                    CorrelationModel::exponential(value.parse().map_err(|_| bad(key))?, dim)?;
            }
            "dim" => {
                let dim = value.parse().map_err(|_| bad(key))?;
                self.variance_only.correlation = CorrelationModel::new(self.variance_only.correlation.kind(), dim)?;
            }
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Apply every `key=value` line of a config file. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_file_contents(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            self.apply(k.trim(), v.trim())?;
        }
        Ok(())
    }
}

fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, T::Err> {
    s.split(',').map(|x| x.trim().parse()).collect()
}

/// Parse `"a,b,c,d"` into `[a, b] × [c, d]`. A side written `0,inf` is the
/// open ray `(0, ∞)`.
pub fn parse_box(s: &str) -> Result<ParamBox> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::Config(format!(
            "box needs four comma-separated values, got '{s}'"
        )));
    }
    let side = |lo: &str, hi: &str| -> Result<Interval> {
        let lo: f64 = lo
            .parse()
            .map_err(|_| Error::Config(format!("invalid box bound '{lo}'")))?;
        if hi.eq_ignore_ascii_case("inf") {
            if lo != 0.0 {
                return Err(Error::Config(format!("an open side must start at 0, got {lo}")));
            }
            return Ok(Interval::PositiveRay);
        }
        let hi: f64 = hi
            .parse()
            .map_err(|_| Error::Config(format!("invalid box bound '{hi}'")))?;
        Interval::closed(lo, hi)
    };
    ParamBox::new(side(parts[0], parts[1])?, side(parts[2], parts[3])?)
}

/// One output row: one estimator at one sample size (and cutoff).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub estimator: String,
    pub n: usize,
    pub k: Option<usize>,
    /// Successful replications.
    pub reps: usize,
    pub failures: usize,
    pub summary: Option<Summary>,
    pub asym_var: Option<f64>,
    pub sample_var: Option<f64>,
    /// Constant `C` of the standardization, where one was applied.
    pub c_normalizer: Option<f64>,
    /// Root mean squared error of the raw estimates about the target.
    pub rmse: Option<f64>,
    pub seed: u64,
    /// Raw estimate of every replication in index order, `None` on failure.
    pub estimates: Vec<Option<f64>>,
}

impl SummaryRow {
    pub fn successes(&self) -> Vec<f64> {
        self.estimates.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathwiseCheck {
    pub n_coarse: usize,
    pub n_fine: usize,
    /// `|σ̂²_fine − σ̂²_coarse| / σ̂²_coarse` for each path.
    pub relative_changes: Vec<f64>,
    pub rms: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub scenario: Scenario,
    pub rows: Vec<SummaryRow>,
    pub pathwise: Option<PathwiseCheck>,
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn simulate_rep(cfg: &ExperimentConfig, design: &Design, rep: usize) -> SamplePath {
    let mut rng = RngStream::tagged(cfg.base_seed, design.len() as u64, rep as u64);
    simulate_ou(&cfg.psi0, design, &mut rng)
}

/// Microergodic estimate, `None` when estimation fails or does not converge.
fn estimate_product(cfg: &ExperimentConfig, kind: EstimatorKind, path: &SamplePath, w: &WeightSeq) -> Option<f64> {
    match estimate(kind.objective(), path, w, &cfg.param_box, &cfg.minimize) {
        Ok(r) if r.converged => Some(r.microergodic),
        _ => None,
    }
}

/// Estimates of every replication at sample size `n`, one column per
/// `(estimator, weights)` job.
fn replicate(cfg: &ExperimentConfig, n: usize, jobs: &[(EstimatorKind, WeightSeq)]) -> Result<Vec<Vec<Option<f64>>>> {
    let design = Design::equispaced(n)?;
    let per_rep: Vec<Vec<Option<f64>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let path = simulate_rep(cfg, &design, rep);
            jobs.iter()
                .map(|(kind, w)| estimate_product(cfg, *kind, &path, w))
                .collect()
        })
        .collect();
    Ok((0..jobs.len())
        .map(|j| per_rep.iter().map(|r| r[j]).collect())
        .collect())
}

fn sample_variance(values: &[f64]) -> Option<f64> {
    summarize_any(values).ok().map(|s| s.variance)
}

#[allow(clippy::too_many_arguments)]
fn make_row(
    cfg: &ExperimentConfig,
    estimator: &str,
    n: usize,
    k: Option<usize>,
    estimates: Vec<Option<f64>>,
    summarized: &[f64],
    asym_var: Option<f64>,
    c_normalizer: Option<f64>,
) -> SummaryRow {
    let ok: Vec<f64> = estimates.iter().flatten().copied().collect();
    SummaryRow {
        scenario: cfg.scenario.name().to_string(),
        estimator: estimator.to_string(),
        n,
        k,
        reps: ok.len(),
        failures: estimates.len() - ok.len(),
        summary: summarize_any(summarized).ok(),
        asym_var,
        sample_var: sample_variance(&ok),
        c_normalizer,
        rmse: rmse(&ok, cfg.psi0.microergodic()),
        seed: cfg.base_seed,
        estimates,
    }
}

fn check_scenario(cfg: &ExperimentConfig, allowed: &[Scenario]) -> Result<()> {
    if !allowed.contains(&cfg.scenario) {
        return Err(Error::Config(format!("scenario {} is not handled here", cfg.scenario)));
    }
    cfg.validate()
}

fn cutoff_column(kind: EstimatorKind, w: &WeightSeq) -> Option<usize> {
    (kind != EstimatorKind::Mle).then(|| w.cutoff())
}

/// Standardized estimates `(√n/C)(θ̂σ̂²/(θ₀σ₀²) − 1)`, summarized per
/// estimator and sample size.
pub fn run_standardized(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    check_scenario(cfg, &[Scenario::Standardized])?;
    in_pool(cfg.threads, || {
        let mut rows = Vec::new();
        for &n in &cfg.n_list {
            let design = Design::equispaced(n)?;
            let jobs: Vec<_> = cfg.estimators.iter().map(|&e| (e, cfg.weights.clone())).collect();
            let columns = replicate(cfg, n, &jobs)?;
            for (&kind, estimates) in cfg.estimators.iter().zip(columns) {
                let c = normalizing_constant(kind.asym(), &design, &cfg.weights)?;
                let asym = asymptotic_variance(kind.asym(), &cfg.psi0, &design, &cfg.weights)?;
                let standardized = estimates
                    .iter()
                    .flatten()
                    .map(|&e| normalize(e, &cfg.psi0, n, c))
                    .collect::<Result<Vec<_>>>()?;
                let k = cutoff_column(kind, &cfg.weights);
                rows.push(make_row(
                    cfg,
                    kind.name(),
                    n,
                    k,
                    estimates,
                    &standardized,
                    Some(asym),
                    Some(c),
                ));
            }
        }
        Ok(rows)
    })?
}

/// Asymptotic and sample variance of `θ̂σ̂²` for unit weights up to each
/// cutoff in `k_list`. Rows are ordered by estimator, cutoff, then `n`.
pub fn run_cutoffs(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    check_scenario(cfg, &[Scenario::Cutoffs])?;
    in_pool(cfg.threads, || {
        let mut jobs = Vec::new();
        for &kind in &cfg.estimators {
            if kind == EstimatorKind::Mle {
                jobs.push((kind, WeightSeq::unit(1)?));
            } else {
                for &k in &cfg.k_list {
                    jobs.push((kind, WeightSeq::unit(k)?));
                }
            }
        }
        let mut rows = Vec::new();
        for &n in &cfg.n_list {
            let design = Design::equispaced(n)?;
            let columns = replicate(cfg, n, &jobs)?;
            for ((kind, w), estimates) in jobs.iter().zip(columns) {
                let asym = asymptotic_variance(kind.asym(), &cfg.psi0, &design, w)?;
                let ok: Vec<f64> = estimates.iter().flatten().copied().collect();
                rows.push(make_row(
                    cfg,
                    kind.name(),
                    n,
                    cutoff_column(*kind, w),
                    estimates,
                    &ok,
                    Some(asym),
                    None,
                ));
            }
        }
        rows.sort_by_key(|r| (estimator_rank(&r.estimator), r.k, r.n));
        Ok(rows)
    })?
}

fn estimator_rank(name: &str) -> usize {
    ["WPMLE", "WPCMLE", "MLE"]
        .iter()
        .position(|e| *e == name)
        .unwrap_or(usize::MAX)
}

/// Raw estimates of `θσ²` and their RMSE about the truth, for a box shape
/// under which the pairwise estimators may or may not be consistent.
pub fn run_inconsistency(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    check_scenario(cfg, &[Scenario::CaseIii, Scenario::CaseI, Scenario::CaseIv])?;
    if !cfg.param_box.attains_product(cfg.psi0.microergodic()) {
        return Err(Error::Config("the box cannot attain the true product θ₀σ₀²".into()));
    }
    in_pool(cfg.threads, || {
        let mut rows = Vec::new();
        for &n in &cfg.n_list {
            let jobs: Vec<_> = cfg.estimators.iter().map(|&e| (e, cfg.weights.clone())).collect();
            let columns = replicate(cfg, n, &jobs)?;
            for (&kind, estimates) in cfg.estimators.iter().zip(columns) {
                let ok: Vec<f64> = estimates.iter().flatten().copied().collect();
                let k = cutoff_column(kind, &cfg.weights);
                rows.push(make_row(cfg, kind.name(), n, k, estimates, &ok, None, None));
            }
        }
        Ok(rows)
    })?
}

/// RMSE at the largest sample size divided by RMSE at the smallest.
pub fn rmse_ratio(rows: &[SummaryRow], estimator: &str) -> Option<f64> {
    let mut mine: Vec<&SummaryRow> = rows.iter().filter(|r| r.estimator == estimator).collect();
    mine.sort_by_key(|r| r.n);
    let first = mine.first()?.rmse?;
    let last = mine.last()?.rmse?;
    Some(last / first)
}

pub const VARIANCE_ESTIMATOR: &str = "WPMLE-sigma2";

/// Closed-form pairwise variance estimates with known correlation and unit
/// pair weights at i.i.d. uniform points (nested across `n_list`), plus the
/// path-wise stabilization check on a nested equispaced design.
pub fn run_variance_only(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    check_scenario(cfg, &[Scenario::VarianceOnly])?;
    let corr = &cfg.variance_only.correlation;
    let dim = corr.dim();
    let sigma2 = cfg.psi0.sigma2();
    let n_max = *cfg.n_list.iter().max().expect("validated");
    let unit = |_: &[f64]| 1.0;
    in_pool(cfg.threads, || {
        let per_rep: Vec<Vec<Option<f64>>> = (0..cfg.replications)
            .into_par_iter()
            .map(|rep| {
                let mut rng = RngStream::tagged(cfg.base_seed, dim as u64, rep as u64);
                let points = uniform_points(n_max, dim, &mut rng);
                let Ok(field) = simulate_general(corr, sigma2, &points, &mut rng) else {
                    return vec![None; cfg.n_list.len()];
                };
                cfg.n_list
                    .iter()
                    .map(|&n| variance_wpmle_closed_form(&field.prefix(n), corr, &unit).ok())
                    .collect()
            })
            .collect();
        let mut rows = Vec::new();
        for (idx, &n) in cfg.n_list.iter().enumerate() {
            let estimates: Vec<Option<f64>> = per_rep.iter().map(|r| r[idx]).collect();
            let ok: Vec<f64> = estimates.iter().flatten().copied().collect();
            let mut row = make_row(cfg, VARIANCE_ESTIMATOR, n, None, estimates, &ok, None, None);
            row.rmse = rmse(&ok, sigma2);
            rows.push(row);
        }
        let pathwise = if cfg.variance_only.check_paths > 0 {
            Some(pathwise_check(cfg)?)
        } else {
            None
        };
        Ok(ExperimentReport {
            scenario: cfg.scenario,
            rows,
            pathwise,
        })
    })?
}

/// Design of the path-wise check: in one dimension the points
/// `j/(2m + 1)`, `j = 1..2m`, whose even-indexed half is the coarse design;
/// in two dimensions i.i.d. uniform points and their first half.
fn pathwise_check(cfg: &ExperimentConfig) -> Result<PathwiseCheck> {
    let corr = &cfg.variance_only.correlation;
    let m = cfg.variance_only.check_n;
    let fine_n = 2 * m;
    let unit = |_: &[f64]| 1.0;
    let changes: Vec<f64> = (0..cfg.variance_only.check_paths)
        .into_par_iter()
        .map(|p| -> Result<f64> {
            let mut rng = RngStream::tagged(cfg.base_seed, u64::MAX - corr.dim() as u64, p as u64);
            let (points, coarse_idx): (PointCloud, Vec<usize>) = if corr.dim() == 1 {
                let xs: Vec<f64> = (1..=fine_n).map(|j| j as f64 / (fine_n + 1) as f64).collect();
                (PointCloud::from_1d(&xs)?, (1..fine_n).step_by(2).collect())
            } else {
                (uniform_points(fine_n, corr.dim(), &mut rng), (0..m).collect())
            };
            let fine: FieldSample = simulate_general(corr, cfg.psi0.sigma2(), &points, &mut rng)?;
            let coarse = fine.select(&coarse_idx);
            let a = variance_wpmle_closed_form(&coarse, corr, &unit)?;
            let b = variance_wpmle_closed_form(&fine, corr, &unit)?;
            Ok((b - a).abs() / a)
        })
        .collect::<Result<_>>()?;
    let rms = (changes.iter().map(|c| c * c).sum::<f64>() / changes.len() as f64).sqrt();
    let max = changes.iter().copied().fold(0.0, f64::max);
    Ok(PathwiseCheck {
        n_coarse: m,
        n_fine: fine_n,
        relative_changes: changes,
        rms,
        max,
    })
}

/// Run whichever scenario `cfg` selects.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let rows = match cfg.scenario {
        Scenario::Standardized => run_standardized(cfg)?,
        Scenario::Cutoffs => run_cutoffs(cfg)?,
        Scenario::CaseIii | Scenario::CaseI | Scenario::CaseIv => run_inconsistency(cfg)?,
        Scenario::VarianceOnly => return run_variance_only(cfg),
    };
    Ok(ExperimentReport {
        scenario: cfg.scenario,
        rows,
        pathwise: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(scenario);
        cfg.n_list = vec![11, 21];
        cfg.replications = 6;
        cfg.k_list = vec![1, 2];
        cfg.variance_only.check_paths = 2;
        cfg.variance_only.check_n = 10;
        cfg
    }

    #[test]
    fn scenario_names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
        }
        assert!("table3".parse::<Scenario>().is_err());
    }

    #[test]
    fn single_replication_has_zero_variance() {
        let mut cfg = small(Scenario::Standardized);
        cfg.replications = 1;
        for row in run_standardized(&cfg).unwrap() {
            let s = row.summary.unwrap();
            assert_eq!(s.variance, 0.0);
            assert_eq!(s.q05, s.q95);
            assert_eq!(row.reps + row.failures, 1);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut cfg = small(Scenario::Standardized);
        cfg.threads = 1;
        let a = run_standardized(&cfg).unwrap();
        cfg.threads = 3;
        let b = run_standardized(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cutoff_rows_and_asymptotics() {
        let cfg = small(Scenario::Cutoffs);
        let rows = run_cutoffs(&cfg).unwrap();
        // 2 cutoffs × 2 pairwise estimators × 2 sizes + 2 MLE rows
        assert_eq!(rows.len(), 10);
        let r = rows.iter().find(|r| r.estimator == "MLE" && r.n == 11).unwrap();
        assert!((r.asym_var.unwrap() - 450.0 / 11.0).abs() < 1e-12);
        assert_eq!(r.k, None);
    }

    #[test]
    fn inconsistency_rows_carry_rmse() {
        let rows = run_inconsistency(&small(Scenario::CaseIii)).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.rmse.is_some()));
        assert!(rmse_ratio(&rows, "WPCMLE").is_some());
        assert!(rmse_ratio(&rows, "MLE").is_none());
    }

    #[test]
    fn variance_only_runs() {
        let report = run_variance_only(&small(Scenario::VarianceOnly)).unwrap();
        assert_eq!(report.rows.len(), 2);
        let pw = report.pathwise.unwrap();
        assert_eq!((pw.n_coarse, pw.n_fine, pw.relative_changes.len()), (10, 20, 2));
    }

    #[test]
    fn config_overrides() {
        let mut cfg = ExperimentConfig::defaults(Scenario::Standardized);
        cfg.apply_file_contents("# comment\nreps = 7\nseed=9\nn=51,101\nbox=14,16,0,inf\nestimators=mle,wpmle\n")
            .unwrap();
        assert_eq!((cfg.replications, cfg.base_seed), (7, 9));
        assert_eq!(cfg.n_list, vec![51, 101]);
        assert_eq!(cfg.param_box.sigma2(), Interval::PositiveRay);
        assert_eq!(cfg.estimators, vec![EstimatorKind::Mle, EstimatorKind::Wpmle]);
        assert!(cfg.apply("nonsense", "1").is_err());
        assert!(cfg.apply("reps", "x").is_err());
        assert!(parse_box("1,inf,0.1,2").is_err());
        assert!(parse_box("1,2,3").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::defaults(Scenario::CaseIii);
        cfg.n_list = vec![2];
        assert!(cfg.validate().is_err());
        cfg.n_list = vec![];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::defaults(Scenario::Standardized);
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
    }
}
