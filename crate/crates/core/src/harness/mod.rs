//! Monte Carlo experiment driver: configuration, trial records, the
//! experiments themselves, the parallel runner and the self-test suite.

pub mod config;
pub mod experiments;
pub mod record;
pub mod runner;
pub mod selftest;

pub use config::{Calibration, ConcentrationConfig, EntryPolicy, ExperimentConfig, MeshConfig, ModelKind, PsiProfile};
pub use experiments::ExperimentKind;
pub use record::{ExperimentReport, SizeAggregate, StatisticSummary, TrialRecord, Verdict};
pub use runner::{
    read_records, report_from_records, run, run_boundedness, run_concentration, run_entrywise_failure, run_in_memory,
    run_local_law, run_spectral_statistics, run_to_dir, run_trace_law,
};
