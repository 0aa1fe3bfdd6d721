//! Kept in its own test binary so that co-running tests do not inflate the
//! measured durations.

mod common;

use slambench_runner::{run_benchmark, AlgorithmSpec, RunSpec};

/// Scheduling and wake-up latency tolerated on top of a requested sleep.
const SLACK: f64 = 0.020;

#[test]
fn processing_time_covers_the_plugin_work() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::tiny(dir.path(), 10);
    let spec = RunSpec::new(&path, vec![AlgorithmSpec::new(common::workload()).with("sleep-ms", 10.0)]);
    let report = run_benchmark(spec).unwrap().remove(0);
    let durations: Vec<f64> = report.rows.iter().map(|r| r.duration.unwrap()).collect();
    assert_eq!(durations.len(), 10);
    for d in &durations {
        assert!((0.010..0.010 + SLACK).contains(d), "{d} s for a 10 ms sleep: {durations:?}");
    }
    let mean = report.summary.rows.mean_duration.unwrap();
    assert!((report.summary.rows.mean_fps.unwrap() - 1.0 / mean).abs() < 1e-9);
}
