//! Config-driven experiments: strict JSON configs, a runner per experiment
//! kind, and reproducible JSON/CSV reports.

mod config;
mod report;
mod runner;

pub use config::{
    AlgebraicConfig, CouplingConfig, ExperimentConfig, ExperimentKind, GeometryConfig, ModelConfig, ObservableName,
    OutputConfig, OutputFormat, PerturbationConfig, PotentialConfig, ScanConfig,
};
pub use report::{emit_pair_table, write_outputs, Constants, ExperimentReport, PairRow, Verdict};
pub use runner::{run_experiment, INVERSE_SLACK, SHARPNESS_TOL, SIGMA_MULTIPLIER};
