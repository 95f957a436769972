//! Simulated data, Monte Carlo experiments, empirical FDP/TPP curves and the
//! knockoff filter.

mod config;
mod curve;
mod data;
mod experiment;
mod knockoff;

pub use config::{DesignKind, DesignSpec, ExperimentConfig, MethodSpec, NoiseScaling, TuningSpec};
pub use curve::{empirical_curve, tpp_fdp, EmpiricalCurve, EmpiricalPoint};
pub use data::{generate_data, stream, DataGenerator, Purpose};
pub use experiment::{lasso_path, resolve_lambdas, run_experiment, run_method, ExperimentReport, MethodOutcome, ReplicateStatus, ReportRow};
pub use knockoff::{
    augmented_optimal_lambda, contrast, equicorrelated_knockoffs, knockoff_select, knockoff_select_with, knockoff_threshold, run_knockoff,
    KnockoffReplicate, KnockoffReport,
};
