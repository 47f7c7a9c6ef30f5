//! Metrics, significance tests, the experiment harness and result files.

pub mod experiment;
pub mod metrics;
pub mod results;
pub mod scaling;
pub mod stats;

pub use experiment::{evaluate_resample, run_experiment, run_resamples, EvaluationResult, ResampleOutcome};
pub use metrics::{compute_metrics, CaseRecord, Metrics};
pub use results::{parse_results, read_results, write_results};
pub use scaling::{loglog_fit, scaling_report, LogLogFit, ScalingPoint, ScalingRow};
pub use stats::{compare, holm_correct, mean_ranks, wilcoxon_signed_rank, win_draw_loss, ComparisonMatrix};
