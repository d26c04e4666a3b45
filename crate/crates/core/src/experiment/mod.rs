//! Experiment configuration, the parallel runner and the built-in paper suite.

mod config;
mod report;
mod runner;
mod suite;

pub use config::{
    ConcatSpec, Duration, ExperimentConfig, Learner, PatternName, PatternSpec, Protocol, RunSpec,
    TraceSource, TraceSpec,
};
pub use report::{render_metrics_table, write_metrics_csv, write_metrics_txt};
pub use runner::{run_experiment, ExperimentOutcome, RunFailure, RunOptions, RunRecord};
pub use suite::{generate_trace, paper_suite_config, QUICK_DURATION};
