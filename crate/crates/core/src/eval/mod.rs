//! U-metrics on the unlabeled test stratum, the experiment grid and the
//! win-count binomial test.

mod binomial;
mod experiment;
mod metrics;

pub use binomial::binomial_win_test;
pub use experiment::{
    run_experiment, CellError, CellResult, ConservativenessViolation, ExperimentConfig,
    ExperimentResult, Method, MetricSummary, PairComparison, METRICS,
};
pub use metrics::{u_accuracy, u_balanced_accuracy, u_positive_count};
