//! Metrics, condition checkers, rate and mixing-time calculators, and
//! Monte-Carlo verifiers for drift and contraction inequalities.

pub mod contraction;
pub mod lyapunov;
pub mod metric;
pub mod rates;
pub mod stats;
pub mod wasserstein;

pub use contraction::{empirical_contraction, ContractionPoint, PairMetric};
pub use lyapunov::{lyapunov_drift_check, DriftPoint, LyapunovKind};
pub use metric::{
    coupling_params, f_metric, rho_eps, CouplingParams, MetricParams, SemimetricParams,
};
pub use rates::{
    check_conditions, contraction_rate, mixing_time_bound, rate_report, ConditionKind,
    ConditionReport, MixingBound, MixingVariant, RateRegime, RateReport,
};
pub use stats::STDERR_FACTOR;
pub use wasserstein::w1_sorted_1d;
