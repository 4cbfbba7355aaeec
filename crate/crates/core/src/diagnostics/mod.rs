//! Statistical checks of the sampler and the concentration bounds.

mod concentration;
mod moments;
mod mse;
mod rate;

pub use concentration::{
    concentration_check, deviation_bound, gradient_concentration_check, gradient_deviation_bound, run_test_phi,
    test_error_bound, BoundCheck, ConcentrationTable, LipschitzStatistic, SeparationMap, TestReport,
};
pub use moments::{moment_check, MomentReport, MomentRow, EXCESS_FACTOR};
pub use mse::{
    bootstrap_mean_ci, mse_experiment, mse_experiment_with, replay, ExperimentManifest, ExperimentReport,
    ExperimentSummary, Provenance, Reference, ReplicateRecord, BOOTSTRAP_RESAMPLES, MAX_DIVERGED_FRACTION,
};
pub use rate::{bayes_rate_experiment, PosteriorMeanMethod, RateFit, RatePoint, RateReport, MIN_R2};

/// `3·√(p(1−p)/m)` with `p` the bound clipped to `[0, 1]`.
pub(crate) fn binomial_slack(bound: f64, m: usize) -> f64 {
    let p = bound.clamp(0.0, 1.0);
    3.0 * (p * (1.0 - p) / m as f64).sqrt()
}
