mod common;

use proptest::prelude::*;
use slambench_core::api::TrackingStatus;
use slambench_core::geometry::Timestamp;
use slambench_runner::report::{read_csv, write_csv, RunMetadata};
use slambench_runner::{export_reports, import_reports, run_benchmark, AlgorithmSpec, MetricRow, ReportFormat, RunReport, RunSpec, RunSummary};

fn sample_reports(dir: &std::path::Path) -> Vec<RunReport> {
    let path = common::synthetic(dir, 8);
    let trace = dir.join("power.txt");
    std::fs::write(&trace, "0 3.5\n10 5.5\n").unwrap();
    let mut spec = RunSpec::new(
        &path,
        vec![
            AlgorithmSpec::new(common::noisy_replay()).with("sigma-trans", 0.01).with("seed", 1i64),
            AlgorithmSpec::new(common::icp_odometry()).with("stride", 4i64),
        ],
    );
    spec.forward_ground_truth = true;
    spec.power_trace = Some(trace);
    run_benchmark(spec).unwrap()
}

#[test]
fn json_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let reports = sample_reports(dir.path());
    let out = dir.path().join("report.json");
    export_reports(&reports, &out, ReportFormat::Json).unwrap();
    assert_eq!(import_reports(&out).unwrap(), reports);
}

#[test]
fn csv_export_has_one_line_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let reports = sample_reports(dir.path());
    let out = dir.path().join("report.csv");
    export_reports(&reports, &out, ReportFormat::Csv).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "algorithm,frame,timestamp,duration,memory,plugin_memory,power,ate,status,phases,ate_errors"
    );
    assert_eq!(lines.count(), reports.iter().map(|r| r.rows.len()).sum::<usize>());

    let groups = read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(groups.len(), reports.len());
    for ((name, rows), report) in groups.iter().zip(&reports) {
        assert_eq!(name, &report.metadata.algorithm);
        assert_eq!(rows, &report.rows);
    }
}

#[test]
fn imported_reports_pass_the_summary_check() {
    let dir = tempfile::tempdir().unwrap();
    let reports = sample_reports(dir.path());
    let out = dir.path().join("report.json");
    export_reports(&reports, &out, ReportFormat::Json).unwrap();
    for r in import_reports(&out).unwrap() {
        r.verify_summary(1e-12).unwrap();
    }
    let mut tampered = reports[0].clone();
    tampered.summary.rows.ate_rmse = tampered.summary.rows.ate_rmse.map(|v| v * 1.01);
    assert!(tampered.verify_summary(1e-12).is_err());
}

#[test]
fn unreadable_inputs_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert!(import_reports(&bad).is_err());
    assert!(import_reports(&dir.path().join("absent.json")).is_err());
    let csv = "algorithm,frame,timestamp,duration,memory,plugin_memory,power,ate,status,phases,ate_errors\na,0,1.000000000,,,,,,,icp,\n";
    assert!(read_csv(csv.as_bytes()).is_err());
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, 0.0..1e-6f64]
}

prop_compose! {
    fn arb_row()(
        frame in 0usize..100_000,
        nanos in 0u64..4_000_000_000_000_000_000,
        duration in proptest::option::of(0.0..10.0f64),
        phases in proptest::collection::btree_map("[a-z]{1,8}", 0.0..1.0f64, 0..4),
        memory in proptest::option::of(any::<i64>()),
        plugin_memory in proptest::option::of(finite()),
        power in proptest::option::of(finite()),
        ate in proptest::option::of(0.0..100.0f64),
        ate_errors in proptest::collection::vec(0.0..100.0f64, 0..4),
        status in proptest::option::of(prop_oneof![
            Just(TrackingStatus::Bootstrap),
            Just(TrackingStatus::Tracking),
            Just(TrackingStatus::Lost)
        ]),
    ) -> MetricRow {
        MetricRow {
            frame,
            timestamp: Timestamp::from_nanos(nanos).unwrap(),
            duration,
            phases,
            memory,
            plugin_memory,
            power,
            ate,
            ate_errors,
            status,
        }
    }
}

fn report_with(rows: Vec<MetricRow>) -> RunReport {
    RunReport {
        metadata: RunMetadata {
            datafile: "x.slam".into(),
            algorithm: "algo".into(),
            library: None,
            parameters: Default::default(),
            seed: 0,
            max_dt: 0.02,
            memory_probe: slambench_core::metrics::MemoryProbeKind::Alloc,
            memory_probe_fallback: None,
            power_trace: None,
            forward_ground_truth: false,
            memory_after_init: None,
            failure: None,
        },
        summary: RunSummary::default(),
        rows,
        trajectory: Vec::new(),
    }
}

proptest! {
    #[test]
    fn rows_survive_csv_and_json(rows in proptest::collection::vec(arb_row(), 1..20)) {
        let report = report_with(rows);
        let mut csv = Vec::new();
        write_csv(std::slice::from_ref(&report), &mut csv).unwrap();
        let groups = read_csv(csv.as_slice()).unwrap();
        prop_assert_eq!(groups.len(), 1);
        prop_assert_eq!(&groups[0].1, &report.rows);

        let json = serde_json::to_string(&report).unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, report);
    }
}
