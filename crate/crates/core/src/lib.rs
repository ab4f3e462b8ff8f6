//! Pairwise, pairwise conditional and full likelihood estimation of the
//! covariance parameters `(θ, σ²)` of a one-dimensional Gaussian process
//! with covariance `σ² e^{−θ|s−t|}`, together with the asymptotic variance
//! of the estimated product `θσ²` and replicated Monte Carlo experiments.

pub mod asymptotics;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod likelihood;
pub mod model;
pub mod optimize;
pub mod rng;
pub mod simulate;

pub use asymptotics::{
    asymptotic_variance, b_coeff, normalize, normalizing_constant, tau2_approx, tau2_exact, wp_variance_from_tau,
    AsymKind, TauMethod, TauResult,
};
pub use error::{Error, Result};
pub use estimate::{
    estimate, estimate_joint, mle, profile_sigma2, variance_wpmle_closed_form, wpcmle, wpmle, BoxSide, EstimationResult,
};
pub use harness::{EstimatorKind, ExperimentConfig, ExperimentReport, Scenario, SummaryRow};
pub use likelihood::{
    cond_pair_loglik, full_neg2_loglik, objective, pair_loglik, pcl_direct, pcl_reindexed, pl_direct, pl_general,
    pl_reindexed, profile_terms, ObjectiveKind, ProfileTerms,
};
pub use model::{
    CorrelationKind, CorrelationModel, CovParams, Design, FieldSample, Interval, ParamBox, PointCloud, SamplePath,
    Smoothness, WeightSeq,
};
pub use optimize::{minimize_box, BoxMinimum, MinimizeOptions};
pub use rng::RngStream;
pub use simulate::{covariance_matrix, exp_cov, simulate_general, simulate_ou, uniform_points};
