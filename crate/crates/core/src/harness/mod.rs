//! Experiment orchestration: baseline, pool construction and scoring,
//! sampling at each ratio, retraining from scratch, evaluation, histograms
//! and summary tables.

mod cli;
mod config;
mod experiment;
mod histogram;
mod report;

pub use cli::{run_cli, ExitStatus};
pub use config::{
    ExperimentConfig, PolicySetup, SamplerGrid, TrainConfigs, CONFIG_SCHEMA, SEED_ENV,
};
pub use experiment::{
    cell_name, prepare_seed, run_cell, run_experiment, run_rl, CellKey, PreparedSeed,
};
pub use histogram::{score_histogram, write_histogram_csv, Histogram, HistogramSpec, ScoreKind};
pub use report::{
    aggregate, compare_report, write_aggregates, write_report_csv, Aggregate, Comparison,
    ExperimentReport, ReportRow, Summary, SummaryRow,
};
