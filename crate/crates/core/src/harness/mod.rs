//! Experiment orchestration behind the command-line tool.

pub mod config;
pub mod pipeline;
pub mod report;

pub use config::{ExperimentConfig, OutputKind, SlopeScale, SweepSpec, TestId};
pub use pipeline::{
    compare_runs, heller_fields, jtilde_all, level_grid, nz2_self_convergence, run_classical,
    run_comparison, run_gwpt, run_reference, timing, transfer_fields, transfer_w, zdiag,
    ComparisonRow, GwptRun, ReferenceRun, StageTimings, TimingRow, ZDiagnostics,
};
