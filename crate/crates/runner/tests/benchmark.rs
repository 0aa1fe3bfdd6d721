mod common;

use std::path::{Path, PathBuf};

use slambench_core::api::{AlgorithmHandle, ConfigApi, FrameView, OutputKind, OutputValue, SlamAlgorithm, POSE_CHANNEL};
use slambench_core::geometry::{Pose, Timestamp};
use slambench_core::ingest::testing::{write_euroc_fixture, write_icl_nuim_fixture, write_tum_fixture, FIXTURE_INTRINSICS};
use slambench_core::ingest::{convert_euroc, convert_icl_nuim, convert_tum, TumOptions};
use slambench_runner::{run_benchmark, run_benchmark_with, AlgorithmSpec, Benchmark, RunReport, RunSpec};

fn test_mode(datafile: &Path, algorithms: Vec<AlgorithmSpec>) -> RunSpec {
    let mut spec = RunSpec::new(datafile, algorithms);
    spec.forward_ground_truth = true;
    spec
}

fn single(spec: RunSpec) -> RunReport {
    let mut reports = run_benchmark(spec).unwrap();
    assert_eq!(reports.len(), 1);
    reports.remove(0)
}

fn converted(dir: &Path, format: &str) -> PathBuf {
    let src = dir.join(format);
    std::fs::create_dir_all(&src).unwrap();
    let out = dir.join(format!("{format}.slam"));
    match format {
        "tum" => {
            write_tum_fixture(&src, 12, true, 1).unwrap();
            let options = TumOptions {
                intrinsics: FIXTURE_INTRINSICS,
                ..TumOptions::default()
            };
            convert_tum(&src, &out, &options).unwrap();
        }
        "icl" => {
            write_icl_nuim_fixture(&src, 12, 50, 2).unwrap();
            convert_icl_nuim(&src, &out, Some(FIXTURE_INTRINSICS)).unwrap();
        }
        "euroc" => {
            write_euroc_fixture(&src, 12, true, 3).unwrap();
            convert_euroc(&src, &out).unwrap();
        }
        _ => unreachable!(),
    };
    out
}

#[test]
fn gt_replay_is_exact_on_every_converted_format() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["tum", "icl", "euroc"] {
        let path = converted(dir.path(), format);
        let report = single(test_mode(&path, vec![AlgorithmSpec::new(common::gt_replay())]));
        let s = &report.summary;
        assert!(report.metadata.failure.is_none(), "{format}: {:?}", report.metadata.failure);
        assert!(s.rows.matched_poses > 0, "{format}: nothing matched");
        assert!(s.rows.ate_rmse.unwrap() <= 1e-9, "{format}: ATE {:?}", s.rows.ate_rmse);
        // the EuRoC fixture moves along a straight line, where a rigid fit is undetermined
        if format != "euroc" {
            assert!(s.ate_aligned_rmse.unwrap_or_else(|| panic!("{format}: {s:?}")) <= 1e-9);
        }
        assert!(s.rpe_translation_rmse.unwrap() <= 1e-9);
    }
}

#[test]
fn without_test_mode_replay_sees_no_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::tiny(dir.path(), 10);
    let report = single(RunSpec::new(&path, vec![AlgorithmSpec::new(common::gt_replay())]));
    assert!(report.metadata.failure.is_none());
    assert!(report.trajectory.is_empty());
    assert_eq!(report.summary.rows.frames, 10);
    assert_eq!(report.summary.rows.processed_frames, 0);
    assert_eq!(report.summary.rows.ate_rmse, None);
}

#[test]
fn rows_of_several_algorithms_share_frames() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::synthetic(dir.path(), 12);
    let spec = test_mode(
        &path,
        vec![
            AlgorithmSpec::new(common::gt_replay()),
            AlgorithmSpec::new(common::noisy_replay()).with("sigma-trans", 0.01).with("seed", 4i64),
            AlgorithmSpec::new(common::icp_odometry()).with("stride", 4i64),
        ],
    );
    let mut steps = 0;
    let reports = run_benchmark_with(spec, |bench, step| {
        assert_eq!(step.frame, steps);
        assert_eq!(step.algorithms.len(), 3);
        for a in &step.algorithms {
            let row = a.row.as_ref().unwrap();
            assert_eq!((row.frame, row.timestamp), (step.frame, step.timestamp));
        }
        assert_eq!(bench.frame(), step.frame + 1);
        steps += 1;
    })
    .unwrap();
    assert_eq!(steps, 12, "one step per input frame");
    let names: Vec<&str> = reports.iter().map(|r| r.metadata.algorithm.as_str()).collect();
    assert_eq!(names, ["gt-replay", "noisy-replay", "icp-odometry"]);
    for r in &reports {
        assert_eq!(r.rows.len(), 12);
        assert!(r.metadata.failure.is_none());
    }
    assert!(reports[0].summary.rows.ate_rmse.unwrap() <= 1e-9);
    assert!(reports[1].summary.rows.ate_rmse.unwrap() > 1e-3);
    assert!(reports[2].summary.rows.ate_rmse.unwrap() < 0.01);
    assert_eq!(reports[1].metadata.parameters["sigma-trans"], 0.01.into());
}

/// Returns failure from `process_once` on its `fail_at`-th step.
#[derive(Default)]
struct Faulty {
    fail_at: usize,
    steps: usize,
    last: Option<Timestamp>,
}

impl SlamAlgorithm for Faulty {
    fn new_configuration(&mut self, _cfg: &mut dyn ConfigApi) -> bool {
        true
    }

    fn init(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        cfg.register_output(POSE_CHANNEL, OutputKind::Pose)
    }

    fn update_frame(&mut self, _cfg: &mut dyn ConfigApi, frame: &FrameView<'_>) -> bool {
        self.last = Some(frame.timestamp);
        true
    }

    fn process_once(&mut self, _cfg: &mut dyn ConfigApi) -> bool {
        self.steps += 1;
        self.steps != self.fail_at
    }

    fn update_outputs(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        cfg.publish(POSE_CHANNEL, self.last.unwrap(), OutputValue::Pose(Pose::identity()))
    }

    fn clean(&mut self) -> bool {
        true
    }
}

#[test]
fn a_failing_algorithm_does_not_stop_the_others() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::tiny(dir.path(), 20);
    let mut spec = test_mode(&path, vec![AlgorithmSpec::new("faulty"), AlgorithmSpec::new("gt-replay")]);
    spec.algorithms[0].name = Some("faulty".into());
    let handles = vec![
        AlgorithmHandle::in_process(
            "faulty",
            Box::new(Faulty {
                fail_at: 5,
                ..Faulty::default()
            }),
        ),
        AlgorithmHandle::in_process("gt-replay", Box::<slambench_reference::GtReplay>::default()),
    ];
    let mut bench = Benchmark::from_handles(spec, handles).unwrap();
    let mut failures = Vec::new();
    while let Some(step) = bench.step().unwrap() {
        failures.push(step.algorithms[0].failure.clone());
        assert!(step.algorithms[1].row.is_some());
    }
    let reports = bench.finish();
    let cause = reports[0].metadata.failure.as_deref().unwrap();
    assert!(cause.contains("sb_process_once"), "{cause}");
    // the frames before the failing one keep their rows
    assert!(!reports[0].rows.is_empty() && reports[0].rows.len() < 20);
    assert!(failures.last().unwrap().is_some());
    assert!(reports[1].metadata.failure.is_none());
    assert_eq!(reports[1].rows.len(), 20);
    assert!(reports[1].summary.rows.ate_rmse.unwrap() <= 1e-9);
}

#[test]
fn unloadable_libraries_are_failed_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::tiny(dir.path(), 5);
    let reports = run_benchmark(test_mode(
        &path,
        vec![
            AlgorithmSpec::new(common::plugin("fixture_missing_symbol")),
            AlgorithmSpec::new(common::plugin("fixture_dup_param")),
            AlgorithmSpec::new(common::gt_replay()),
        ],
    ))
    .unwrap();
    assert!(reports[0].metadata.failure.as_deref().unwrap().contains("sb_process_once"));
    assert!(reports[1].metadata.failure.as_deref().unwrap().contains("declared twice"));
    assert!(reports[0].rows.is_empty() && reports[1].rows.is_empty());
    assert!(reports[2].metadata.failure.is_none());
    assert_eq!(reports[2].rows.len(), 5);
}

#[test]
fn bad_parameter_fails_only_its_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::tiny(dir.path(), 5);
    let reports = run_benchmark(test_mode(
        &path,
        vec![
            AlgorithmSpec::new(common::noisy_replay()).with("sigma-trans", -1.0),
            AlgorithmSpec::new(common::gt_replay()),
        ],
    ))
    .unwrap();
    assert!(reports[0].metadata.failure.as_deref().unwrap().contains("outside"));
    assert!(reports[1].metadata.failure.is_none());
}

#[test]
fn duplicate_algorithm_names_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::tiny(dir.path(), 5);
    let spec = RunSpec::new(&path, vec![AlgorithmSpec::new(common::gt_replay()), AlgorithmSpec::new(common::gt_replay())]);
    assert!(run_benchmark(spec.clone()).is_err());
    let mut renamed = spec;
    renamed.algorithms[1].name = Some("gt-replay-2".into());
    assert_eq!(run_benchmark(renamed).unwrap().len(), 2);
}

#[test]
fn frame_limit_stops_early() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::tiny(dir.path(), 20);
    let mut spec = test_mode(&path, vec![AlgorithmSpec::new(common::gt_replay())]);
    spec.frame_limit = Some(7);
    let report = single(spec);
    assert_eq!(report.rows.len(), 7);
    assert_eq!(report.rows.last().unwrap().frame, 6);
}

#[test]
fn power_trace_fills_the_power_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::tiny(dir.path(), 10);
    let trace = dir.path().join("power.txt");
    std::fs::write(&trace, "# constant draw\n0 4.2\n1000 4.2\n").unwrap();
    let mut spec = test_mode(&path, vec![AlgorithmSpec::new(common::gt_replay())]);
    let report = single(spec.clone());
    assert!(report.rows.iter().all(|r| r.power.is_none()));
    assert_eq!(report.summary.rows.mean_power, None);

    spec.power_trace = Some(trace);
    let report = single(spec);
    assert!(report.rows.iter().all(|r| r.power == Some(4.2)));
    assert!((report.summary.rows.mean_power.unwrap() - 4.2).abs() <= 1e-12);
}

#[test]
fn runs_are_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::synthetic(dir.path(), 10);
    let spec = test_mode(
        &path,
        vec![
            AlgorithmSpec::new(common::noisy_replay()).with("sigma-trans", 0.02).with("sigma-rot", 0.01).with("seed", 9i64),
            AlgorithmSpec::new(common::icp_odometry()).with("stride", 4i64),
        ],
    );
    let a = run_benchmark(spec.clone()).unwrap();
    let b = run_benchmark(spec).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.trajectory, y.trajectory);
        let errors = |r: &RunReport| r.rows.iter().map(|r| r.ate_errors.clone()).collect::<Vec<_>>();
        assert_eq!(errors(x), errors(y));
        assert_eq!(x.summary.rows.ate_rmse, y.summary.rows.ate_rmse);
        assert_eq!(x.summary.rer, y.summary.rer);
    }
}

#[test]
fn summary_matches_a_recomputation_from_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::synthetic(dir.path(), 10);
    let reports = run_benchmark(test_mode(
        &path,
        vec![
            AlgorithmSpec::new(common::noisy_replay()).with("sigma-trans", 0.05).with("seed", 2i64),
            AlgorithmSpec::new(common::icp_odometry()).with("stride", 4i64),
        ],
    ))
    .unwrap();
    for r in &reports {
        r.verify_summary(1e-12).unwrap();
        let errors: Vec<f64> = r.rows.iter().flat_map(|row| row.ate_errors.iter().copied()).collect();
        let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
        assert!((r.summary.rows.ate_rmse.unwrap() - rmse).abs() <= 1e-12);
        // the running value reported with each row is the latest error
        let mut latest = None;
        for row in &r.rows {
            latest = row.ate_errors.last().copied().or(latest);
            assert_eq!(row.ate, latest);
        }
    }
}

#[test]
fn phases_fit_inside_the_frame_duration() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::synthetic(dir.path(), 8);
    let report = single(RunSpec::new(&path, vec![AlgorithmSpec::new(common::icp_odometry()).with("stride", 4i64)]));
    let processed: Vec<_> = report.rows.iter().filter(|r| r.duration.is_some()).collect();
    assert_eq!(processed.len(), 7, "every depth frame after the first");
    for row in processed {
        let phases: f64 = row.phases.values().sum();
        assert!(phases > 0.0 && phases <= row.duration.unwrap(), "{phases} vs {:?}", row.duration);
    }
}

#[test]
fn fixed_buffers_report_constant_plugin_memory() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::synthetic(dir.path(), 8);
    let report = single(RunSpec::new(&path, vec![AlgorithmSpec::new(common::icp_odometry()).with("stride", 4i64)]));
    let counters: Vec<f64> = report.rows.iter().filter_map(|r| r.plugin_memory).collect();
    assert!(counters.len() >= 7);
    assert!(counters.iter().all(|&m| m > 0.0 && m == counters[0]));
    assert_eq!(report.summary.rows.peak_plugin_memory, Some(counters[0]));
}

#[test]
fn dense_odometry_reconstructs_the_room() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::synthetic(dir.path(), 20);
    let report = single(RunSpec::new(&path, vec![AlgorithmSpec::new(common::icp_odometry()).with("stride", 4i64)]));
    let s = &report.summary;
    assert!(s.rows.ate_rmse.unwrap() < 0.01, "{:?}", s.rows.ate_rmse);
    assert!(s.rer.unwrap() < 0.01, "{:?}", s.rer);

    let mut no_rer = RunSpec::new(&path, vec![AlgorithmSpec::new(common::icp_odometry()).with("stride", 4i64)]);
    no_rer.reconstruction_error = false;
    assert_eq!(single(no_rer).summary.rer, None);
}

#[test]
fn missing_datafile_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = RunSpec::new(dir.path().join("absent.slam"), vec![AlgorithmSpec::new(common::gt_replay())]);
    assert!(run_benchmark(spec).is_err());
    let spec = RunSpec::new(common::tiny(dir.path(), 3), Vec::new());
    assert!(run_benchmark(spec).is_err());
}
