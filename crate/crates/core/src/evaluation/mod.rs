//! Experiment orchestration: cohort preparation, repeated balanced splits,
//! feature-count sweeps, the six-feature comparison, SD against cohort size,
//! and descriptive cohort statistics.

mod cohort_stats;
mod experiment;
mod prepare;
mod protocols;

pub use cohort_stats::{
    cohort_stats, mann_whitney_p, welch_t_p, AoiSpec, CohortStats, MeasureRow, NamedRect, StatTest,
};
pub use experiment::{
    balanced_split_sizes, run_experiment, sem, EvalReport, ExperimentConfig, FeatureSet, RankOn, RunRecord, SubsetSpec,
    WeightMode,
};
pub use prepare::{prepare_cohort, PipelineConfig, PreparedCohort, PreparedParticipant};
pub use protocols::{sd_vs_users, sota_protocol, sweep_feature_counts, write_xy_csv, SotaProtocol};
