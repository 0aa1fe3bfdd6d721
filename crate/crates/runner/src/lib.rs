//! Benchmark execution for the SLAM harness: the per-frame benchmark loop
//! and its text table, JSON / CSV reports, parameter sweeps with Pareto
//! extraction, and the HTTP run-control service.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
mod error;
pub mod overrides;
pub mod pareto;
pub mod report;
pub mod service;
pub mod sweep;
pub mod table;

pub use bench::{run_benchmark, run_benchmark_with, AlgorithmSpec, Benchmark, FrameStep, RunSpec};
pub use error::RunnerError;
pub use pareto::{compute_pareto, Objectives, ParetoFront};
pub use report::{export_reports, import_reports, MetricRow, ReportFormat, RunReport, RunSummary};
pub use sweep::{run_sweep, Domain, Strategy, SweepOutcome, SweepSample, SweepSpec, SweptParameter};
