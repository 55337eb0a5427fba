//! Metrics, cross-validated experiments, significance tests and latency.

mod bench;
mod experiment;
mod metrics;
mod model;
mod report;
mod sweep;
mod ttest;

pub use bench::{bench_latency, LatencyReport};
pub use experiment::{
    fit_fold, fit_folds, mean_sizes, paired_differences, run_experiment, FittedFold, FoldResult, ModelConfig,
    NeuralTraining,
};
pub use metrics::{mae, naive_baseline, normalized_mae, per_channel_mae, NaiveBaseline};
pub use model::{ModelArtifact, NaiveModel, Regressor, TrainedModel};
pub use report::{compare, read_results, results_header, summarize, write_results, Comparison, ModelSummary};
pub use sweep::{fixed_temperature_sweep, temperature_grid, SweepCurve};
pub use ttest::{corrected_ttest, incomplete_beta, ln_gamma, student_t_cdf, TTestReport};
