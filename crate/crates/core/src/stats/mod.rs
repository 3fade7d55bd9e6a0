//! Evaluation statistics. Thresholds follow one convention throughout:
//! a sample is called positive iff `score >= threshold`.

pub mod aggregate;
pub mod bootstrap;
pub mod delong;
pub mod ranking;
pub mod regression;
pub mod report;
pub mod tertiles;
pub mod welch;

pub use aggregate::{macro_average, micro_average, split_columns, Averaging, MacroAverage, ScoredSample};
pub use bootstrap::{bootstrap_ci, percentile_sorted, BootstrapCi, DEFAULT_BOOTSTRAP_ITERATIONS};
pub use delong::{delong_test, structural_components, DelongResult};
pub use ranking::{
    auprc, auroc, mann_whitney_pairs, mann_whitney_sorted, operating_point_at, youden_operating_point, OperatingPoint,
    PAIR_COUNT_LIMIT,
};
pub use regression::{pearson, regression_metrics, RegressionMetrics};
pub use report::{metric_report, MetricReport};
pub use tertiles::{risk_tertiles, GroupSummary, RiskGroup, Tertiles};
pub use welch::{welch_t_test, WelchResult};
