//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slambench_core::api::{load_algorithm, AlgorithmHandle, ApiError, FrameView, LifecycleState, OutputData, POSE_CHANNEL};
use slambench_core::datafile::payload::{decode_pose, encode_imu, ImuSample};
use slambench_core::datafile::{read_datafile, testing, write_datafile, DatafileContents, FrameRecord, ImuParams, SensorDescriptor, SensorType};
use slambench_core::geometry::{umeyama_align, SimTransform};
use slambench_core::ingest::testing::{
    write_euroc_fixture, write_icl_nuim_fixture, write_tum_fixture, FixtureExpectation, FIXTURE_INTRINSICS,
};
use slambench_core::ingest::{convert_euroc, convert_icl_nuim, convert_tum, TumOptions};
use slambench_core::metrics::{
    associate, ate_aligned, ate_runtime, icp, rpe, AlignMode, AssociatedPair, IcpParams, MemoryProbeKind, RpeDelta, TrajectorySample,
    DEFAULT_MAX_DT,
};
use slambench_core::{Pose, Timestamp, Vec3};
use slambench_runner::pareto::pareto_indices;
use slambench_runner::{run_benchmark, run_sweep, AlgorithmSpec, Domain, Objectives, RunReport, RunSpec, Strategy, SweepSpec, SweptParameter};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Debug>(r: Result<T, E>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e:?}"))
}

fn tempdir() -> Result<tempfile::TempDir, String> {
    ok(tempfile::tempdir(), "tempdir")
}

// ---- datafile codec

fn datafile_round_trip() -> Outcome {
    let dir = tempdir()?;
    let path = dir.path().join("r.slam");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let n = 1000;
    for i in 0..n {
        let c = testing::random_contents(&mut rng);
        ok(write_datafile(&path, &c.sensors, &c.gt_frames, &c.in_frames), "write")?;
        let back = ok(read_datafile(&path), "read")?;
        ensure(back == c, || format!("instance {i} differs after write and read"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("{n} instances took {secs:.1} s"))?;
    Ok(format!("{n} instances bit-exact in {secs:.2} s"))
}

// ---- converters

fn frames_of(c: &DatafileContents, sensor: u32, gt: bool) -> Vec<(Timestamp, Vec<u8>)> {
    let list = if gt { &c.gt_frames } else { &c.in_frames };
    list.iter()
        .filter(|f| f.sensor_index == sensor)
        .map(|f| (f.timestamp, f.payload.clone()))
        .collect()
}

fn check_fixture(c: &DatafileContents, cameras: &[u32], gt_sensor: u32, expect: &FixtureExpectation, what: &str) -> Result<(), String> {
    for (k, &sensor) in cameras.iter().enumerate() {
        ensure(frames_of(c, sensor, false) == expect.cameras[k], || format!("{what}: camera {sensor} frames differ"))?;
    }
    let poses = frames_of(c, gt_sensor, true);
    ensure(poses.len() == expect.poses.len(), || format!("{what}: {} poses, expected {}", poses.len(), expect.poses.len()))?;
    for ((t, payload), (et, tr, q)) in poses.iter().zip(&expect.poses) {
        ensure(t == et, || format!("{what}: pose timestamp {t:?} vs {et:?}"))?;
        let want = ok(Pose::from_wxyz(q[0], q[1], q[2], q[3], Vec3::new(tr[0], tr[1], tr[2])), "pose")?;
        // pose payloads are single precision
        ensure(ok(decode_pose(payload), "decode")?.approx_eq(&want, 1e-6), || format!("{what}: pose at {t:?}"))?;
    }
    let sorted = |l: &[FrameRecord]| l.windows(2).all(|w| w[0].timestamp <= w[1].timestamp);
    ensure(sorted(&c.gt_frames) && sorted(&c.in_frames), || format!("{what}: frames out of order"))
}

fn converters() -> Outcome {
    let dir = tempdir()?;
    let options = TumOptions {
        intrinsics: FIXTURE_INTRINSICS,
        ..TumOptions::default()
    };

    let tum = dir.path().join("tum");
    let expect = ok(write_tum_fixture(&tum, 10, true, 1), "tum fixture")?;
    let out = dir.path().join("tum.slam");
    ok(convert_tum(&tum, &out, &options), "convert tum")?;
    check_fixture(&ok(read_datafile(&out), "read")?, &[0, 1], 2, &expect, "tum")?;

    let icl = dir.path().join("icl");
    let expect = ok(write_icl_nuim_fixture(&icl, 10, 50, 2), "icl fixture")?;
    let out = dir.path().join("icl.slam");
    ok(convert_icl_nuim(&icl, &out, Some(FIXTURE_INTRINSICS)), "convert icl")?;
    let c = ok(read_datafile(&out), "read")?;
    check_fixture(&c, &[0, 1], 2, &expect, "icl-nuim")?;
    let cloud = frames_of(&c, 3, true);
    let points = ok(slambench_core::datafile::payload::decode_point_cloud(&cloud[0].1), "cloud")?;
    ensure(points == expect.cloud, || "icl-nuim: cloud differs".into())?;

    let euroc = dir.path().join("euroc");
    let expect = ok(write_euroc_fixture(&euroc, 10, true, 3), "euroc fixture")?;
    let out = dir.path().join("euroc.slam");
    ok(convert_euroc(&euroc, &out), "convert euroc")?;
    let c = ok(read_datafile(&out), "read")?;
    let gt_sensor = c.sensors.iter().position(|s| s.sensor_type() == SensorType::GtPose).unwrap() as u32;
    check_fixture(&c, &[0, 1], gt_sensor, &expect, "euroc")?;

    let bare = dir.path().join("bare");
    ok(write_tum_fixture(&bare, 4, false, 4), "tum fixture")?;
    let out = dir.path().join("bare.slam");
    let summary = ok(convert_tum(&bare, &out, &options), "convert tum")?;
    let c = ok(read_datafile(&out), "read")?;
    ensure(c.gt_frames.is_empty() && summary.frames("gt_pose") == Some(0), || "empty ground truth produced frames".into())?;
    ensure(c.in_frames.len() == 8, || format!("{} input frames without ground truth", c.in_frames.len()))?;
    Ok("tum, icl-nuim, euroc exact; empty ground truth section".into())
}

// ---- metric oracles

type Mat = [f64; 16];

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = [0.0; 16];
    for r in 0..4 {
        for c in 0..4 {
            out[r * 4 + c] = (0..4).map(|k| a[r * 4 + k] * b[k * 4 + c]).sum();
        }
    }
    out
}

/// Inverse of a rigid transform: transpose the rotation, rotate back the translation.
fn rigid_inv(m: &Mat) -> Mat {
    let mut out = [0.0; 16];
    for r in 0..3 {
        for c in 0..3 {
            out[r * 4 + c] = m[c * 4 + r];
        }
        out[r * 4 + 3] = -(0..3).map(|k| m[k * 4 + r] * m[k * 4 + 3]).sum::<f64>();
    }
    out[15] = 1.0;
    out
}

fn tnorm(m: &Mat) -> f64 {
    (m[3] * m[3] + m[7] * m[7] + m[11] * m[11]).sqrt()
}

fn angle(m: &Mat) -> f64 {
    let cos = (m[0] + m[5] + m[10] - 1.0) / 2.0;
    let (x, y, z) = (m[9] - m[6], m[2] - m[8], m[4] - m[1]);
    ((x * x + y * y + z * z).sqrt() / 2.0).atan2(cos)
}

fn mat(p: &Pose) -> Mat {
    p.to_row_major()
}

fn random_pose(rng: &mut impl Rng) -> Pose {
    let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let t = Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    Pose::from_axis_angle(axis, rng.random_range(-3.0..3.0), t)
}

fn random_times(rng: &mut impl Rng, n: usize) -> Vec<u64> {
    let mut t = rng.random_range(0..1_000_000_000u64);
    (0..n)
        .map(|_| {
            t += rng.random_range(0..60_000_000u64);
            t
        })
        .collect()
}

fn trajectory(rng: &mut impl Rng, times: &[u64]) -> Vec<TrajectorySample> {
    times
        .iter()
        .map(|&t| TrajectorySample::new(Timestamp::from_nanos(t).unwrap(), random_pose(rng)))
        .collect()
}

fn brute_associate(est: &[TrajectorySample], gt: &[TrajectorySample], max_dt: f64) -> Vec<(usize, usize)> {
    let mut used = vec![false; gt.len()];
    let mut out = Vec::new();
    for (ei, e) in est.iter().enumerate() {
        let te = e.timestamp.as_nanos() as i128;
        let best = (0..gt.len())
            .filter(|&g| !used[g])
            .map(|g| (g, (gt[g].timestamp.as_nanos() as i128 - te).abs()))
            .min_by_key(|&(g, d)| (d, g));
        if let Some((g, d)) = best {
            if d as f64 * 1e-9 <= max_dt {
                used[g] = true;
                out.push((ei, g));
            }
        }
    }
    out
}

fn brute_ate(pairs: &[AssociatedPair]) -> Vec<f64> {
    let s = mul(&mat(&pairs[0].gt.pose), &rigid_inv(&mat(&pairs[0].est.pose)));
    pairs
        .iter()
        .map(|p| {
            let g = mat(&p.gt.pose);
            let e = mul(&s, &mat(&p.est.pose));
            ((g[3] - e[3]).powi(2) + (g[7] - e[7]).powi(2) + (g[11] - e[11]).powi(2)).sqrt()
        })
        .collect()
}

fn brute_rpe(pairs: &[AssociatedPair], step: usize) -> Vec<(f64, f64)> {
    (0..pairs.len() - step)
        .map(|i| {
            let q = mul(&rigid_inv(&mat(&pairs[i].gt.pose)), &mat(&pairs[i + step].gt.pose));
            let p = mul(&rigid_inv(&mat(&pairs[i].est.pose)), &mat(&pairs[i + step].est.pose));
            let e = mul(&rigid_inv(&q), &p);
            (tnorm(&e), angle(&e))
        })
        .collect()
}

fn pairs_for(rng: &mut impl Rng, n: usize) -> Vec<AssociatedPair> {
    let times = random_times(rng, n);
    let gt = trajectory(rng, &times);
    let est = trajectory(rng, &times);
    associate(&est, &gt, 0.02)
}

fn transformed(pairs: &[AssociatedPair], left_gt: &Pose, left_est: &Pose) -> Vec<AssociatedPair> {
    pairs
        .iter()
        .map(|p| AssociatedPair {
            gt: TrajectorySample::new(p.gt.timestamp, *left_gt * p.gt.pose),
            est: TrajectorySample::new(p.est.timestamp, *left_est * p.est.pose),
            dt: p.dt,
        })
        .collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn metric_oracles() -> Outcome {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..500 {
        let (n, k) = (rng.random_range(0..40), rng.random_range(0..40));
        let gt_times = random_times(&mut rng, n);
        let mut est_times = random_times(&mut rng, k);
        if rng.random_bool(0.3) && !gt_times.is_empty() {
            est_times = gt_times.iter().map(|t| t + rng.random_range(0..3) * 10_000_000).collect();
            est_times.sort();
        }
        let gt = trajectory(&mut rng, &gt_times);
        let est = trajectory(&mut rng, &est_times);
        let max_dt = rng.random_range(0.001..0.05);
        let got: Vec<(usize, usize)> = associate(&est, &gt, max_dt)
            .iter()
            .map(|p| (est.iter().position(|e| e == &p.est).unwrap(), gt.iter().position(|g| g == &p.gt).unwrap()))
            .collect();
        ensure(got == brute_associate(&est, &gt, max_dt), || format!("associate differs on set {i}"))?;
    }
    for i in 0..500 {
        let n = rng.random_range(2..60);
        let pairs = pairs_for(&mut rng, n);
        let ate = ok(ate_runtime(&pairs), "ate")?;
        ensure(close(&ate.errors, &brute_ate(&pairs), TOL), || format!("ATE differs on pair set {i}"))?;
        let step = rng.random_range(1..n);
        let r = ok(rpe(&pairs, RpeDelta::Pairs(step)), "rpe")?;
        let (bt, br): (Vec<f64>, Vec<f64>) = brute_rpe(&pairs, step).into_iter().unzip();
        ensure(close(&r.trans_errors, &bt, TOL), || format!("RPE translation differs on pair set {i}"))?;
        ensure(close(&r.rot_errors, &br, TOL), || format!("RPE rotation differs on pair set {i}"))?;
    }
    for i in 0..500 {
        let n = rng.random_range(4..40);
        let pairs = pairs_for(&mut rng, n);
        let t = random_pose(&mut rng);
        let a = ok(ate_runtime(&pairs), "ate")?;
        let b = ok(ate_runtime(&transformed(&pairs, &t, &t)), "ate")?;
        ensure(close(&a.errors, &b.errors, TOL), || format!("first-pose alignment not invariant on set {i}"))?;

        let (x, y) = (random_pose(&mut rng), random_pose(&mut rng));
        let r0 = ok(rpe(&pairs, RpeDelta::Pairs(1)), "rpe")?;
        let r1 = ok(rpe(&transformed(&pairs, &x, &y), RpeDelta::Pairs(1)), "rpe")?;
        ensure(close(&r0.trans_errors, &r1.trans_errors, TOL), || format!("RPE not offset invariant on set {i}"))?;

        let s = rng.random_range(0.1..10.0);
        let scaled: Vec<AssociatedPair> = pairs
            .iter()
            .map(|p| AssociatedPair {
                est: TrajectorySample::new(p.est.timestamp, Pose::new(*p.est.pose.rotation(), p.est.pose.translation() * s)),
                ..*p
            })
            .collect();
        let a = ok(ate_aligned(&pairs, AlignMode::Similarity), "aligned")?.stats.rmse;
        let b = ok(ate_aligned(&scaled, AlignMode::Similarity), "aligned")?.stats.rmse;
        ensure((a - b).abs() <= TOL, || format!("similarity ATE not scale invariant on set {i}: {a} vs {b}"))?;
    }
    Ok("associate, ATE, RPE match brute force on 500 sets; invariances hold to 1e-9".into())
}

// ---- alignment

fn cloud(rng: &mut impl Rng, n: usize, half: f64) -> Vec<Vec3> {
    (0..n)
        .map(|_| Vec3::new(rng.random_range(-half..half), rng.random_range(-half..half), rng.random_range(-half..half)))
        .collect()
}

fn alignment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let with_scale = i % 2 == 0;
        let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let t = Vec3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let pose = Pose::from_axis_angle(axis, rng.random_range(-3.0..3.0), t);
        let scale = if with_scale { rng.random_range(0.2..5.0) } else { 1.0 };
        let truth = ok(SimTransform::new(scale, pose), "sim")?;
        let n = rng.random_range(3..40);
        let src = cloud(&mut rng, n, 5.0);
        let dst: Vec<Vec3> = src.iter().map(|p| truth.apply(p)).collect();
        let est = ok(umeyama_align(&src, &dst, with_scale), "umeyama")?;
        let q = est.pose.quaternion_wxyz().iter().zip(truth.pose.quaternion_wxyz()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let err = q.max((est.translation() - truth.translation()).amax()).max((est.scale - truth.scale).abs());
        worst = worst.max(err);
        ensure(err <= 1e-6, || format!("transform {i} recovered to {err:e}"))?;
    }

    let params = IcpParams {
        max_iterations: 200,
        tolerance: 1e-12,
        max_correspondence: 0.5,
    };
    for i in 0..20 {
        let src = cloud(&mut rng, 600, 1.0);
        let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let angle = rng.random_range(0.0..5f64.to_radians());
        let dir = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize();
        let truth = Pose::from_axis_angle(axis, angle, dir * rng.random_range(0.0..0.05));
        let dst: Vec<Vec3> = src.iter().map(|p| truth.transform_point(p)).collect();
        let r = ok(icp(&src, &dst, &params), "icp")?;
        ensure(r.transform.approx_eq(&truth, 1e-4), || format!("ICP perturbation {i} not recovered"))?;
        ensure(r.residual_history.windows(2).all(|w| w[1] <= w[0]), || format!("ICP residuals rose on perturbation {i}"))?;
    }
    Ok(format!("1000 transforms, worst component error {worst:.1e}; ICP recovers 20 perturbations"))
}

// ---- end-to-end runs

fn single(spec: RunSpec) -> Result<RunReport, String> {
    let mut reports = ok(run_benchmark(spec), "run")?;
    let r = reports.remove(0);
    match &r.metadata.failure {
        Some(cause) => Err(format!("{}: {cause}", r.metadata.algorithm)),
        None => Ok(r),
    }
}

fn test_mode(datafile: &Path, algorithm: AlgorithmSpec) -> RunSpec {
    let mut spec = RunSpec::new(datafile, vec![algorithm]);
    spec.forward_ground_truth = true;
    spec
}

fn ground_truth(path: &Path) -> Result<Vec<TrajectorySample>, String> {
    let c = ok(read_datafile(path), "read")?;
    c.gt_frames
        .iter()
        .filter(|f| c.sensors[f.sensor_index as usize].sensor_type() == SensorType::GtPose)
        .map(|f| Ok(TrajectorySample::new(f.timestamp, ok(decode_pose(&f.payload), "pose")?)))
        .collect()
}

fn log_rmse(path: &Path) -> Result<(usize, f64), String> {
    let text = ok(std::fs::read_to_string(path), "noise log")?;
    let sq: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').skip(2).take(3).map(|v| v.parse().unwrap()).collect();
            f.iter().map(|v| v * v).sum()
        })
        .collect();
    Ok((sq.len(), (sq.iter().sum::<f64>() / sq.len() as f64).sqrt()))
}

fn end_to_end() -> Outcome {
    let dir = tempdir()?;
    let mut worst = 0.0f64;
    for format in ["tum", "icl-nuim", "euroc"] {
        let src = dir.path().join(format);
        let out = dir.path().join(format!("{format}.slam"));
        let written = match format {
            "tum" => write_tum_fixture(&src, 10, true, 5),
            "icl-nuim" => write_icl_nuim_fixture(&src, 10, 20, 6),
            _ => write_euroc_fixture(&src, 10, false, 7),
        };
        ok(written, format)?;
        let converted = match format {
            "tum" => {
                let options = TumOptions {
                    intrinsics: FIXTURE_INTRINSICS,
                    ..TumOptions::default()
                };
                convert_tum(&src, &out, &options)
            }
            "icl-nuim" => convert_icl_nuim(&src, &out, Some(FIXTURE_INTRINSICS)),
            _ => convert_euroc(&src, &out),
        };
        ok(converted, format)?;
        let r = single(test_mode(&out, AlgorithmSpec::new(common::gt_replay())))?;
        let ate = r.summary.rows.ate_rmse.ok_or(format!("{format}: no ATE"))?;
        ensure(ate <= 1e-9, || format!("gt-replay on {format}: ATE RMSE {ate:e}"))?;
        worst = worst.max(ate);
    }

    let path = common::tiny(dir.path(), 1000);
    let log = dir.path().join("noise.csv");
    let r = single(test_mode(
        &path,
        AlgorithmSpec::new(common::noisy_replay())
            .with("sigma-trans", 0.01)
            .with("seed", 42i64)
            .with("noise-log", log.to_str().unwrap()),
    ))?;
    let ate = r.summary.rows.ate_rmse.ok_or("noisy-replay: no ATE")?;
    let (n, expected) = log_rmse(&log)?;
    ensure(n == 1000 && r.summary.rows.matched_poses == 1000, || format!("{n} noise samples, {} matched", r.summary.rows.matched_poses))?;
    let rel = (ate - expected).abs() / expected;
    ensure(rel <= 0.15, || format!("noisy-replay ATE {ate} vs logged {expected}"))?;

    let drift = 0.001;
    let r = single(test_mode(&path, AlgorithmSpec::new(common::noisy_replay()).with("drift", drift)))?;
    let pairs = associate(&r.trajectory, &ground_truth(&path)?, DEFAULT_MAX_DT);
    let stats = ok(rpe(&pairs, RpeDelta::Pairs(1)), "rpe")?;
    let off = stats.trans_errors.iter().map(|e| (e - drift).abs()).fold(0.0, f64::max);
    ensure(stats.trans_errors.len() == 999 && off <= 1e-9, || format!("drift RPE off by {off:e} over {} steps", stats.trans_errors.len()))?;
    Ok(format!(
        "gt-replay ATE <= {worst:.1e} on three formats; noisy ATE {ate:.5} vs logged {expected:.5} ({:.1}%); drift RPE within {off:.1e}",
        rel * 100.0
    ))
}

// ---- dense pipeline

fn icp_run(path: &Path, stride: i64, rer: bool) -> Result<RunReport, String> {
    let mut spec = RunSpec::new(path, vec![AlgorithmSpec::new(common::icp_odometry()).with("stride", stride)]);
    spec.reconstruction_error = rer;
    single(spec)
}

fn dense_pipeline() -> Outcome {
    let dir = tempdir()?;
    let path = common::synthetic(dir.path(), 60);
    let start = Instant::now();
    let r = icp_run(&path, 2, true)?;
    let secs = start.elapsed().as_secs_f64();
    let ate = r.summary.ate_aligned_rmse.ok_or("no aligned ATE")?;
    let rer = r.summary.rer.ok_or("no RER")?;
    ensure(ate < 0.01 && rer < 0.01, || format!("aligned ATE {ate}, RER {rer}"))?;
    ensure(secs < 120.0, || format!("run took {secs:.1} s"))?;
    let mean = |r: &RunReport| r.summary.rows.mean_duration.ok_or("no durations".to_string());
    let fine = mean(&icp_run(&path, 2, false)?)?;
    let coarse = mean(&icp_run(&path, 8, false)?)?;
    ensure(coarse < fine, || format!("stride 8 mean {coarse} s not below stride 2 mean {fine} s"))?;
    Ok(format!(
        "aligned ATE {ate:.5} m, RER {rer:.5} m in {secs:.1} s; mean frame {:.2} ms at stride 2, {:.2} ms at stride 8",
        fine * 1e3,
        coarse * 1e3
    ))
}

// ---- Pareto front

fn brute_front(points: &[Objectives]) -> Vec<usize> {
    let mut front: Vec<usize> = (0..points.len())
        .filter(|&i| !points.iter().any(|q| q.dominates(&points[i])))
        .collect();
    front.sort_by(|&a, &b| points[a].duration.total_cmp(&points[b].duration).then(a.cmp(&b)));
    front
}

fn pareto() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..1000 {
        let n = rng.random_range(0..60);
        let coarse = rng.random_bool(0.5);
        let points: Vec<Objectives> = (0..n)
            .map(|_| {
                if coarse {
                    Objectives::new(rng.random_range(0..6) as f64, rng.random_range(0..6) as f64)
                } else {
                    Objectives::new(rng.random(), rng.random())
                }
            })
            .collect();
        ensure(pareto_indices(&points) == brute_front(&points), || format!("front differs on set {i}"))?;
    }

    let dir = tempdir()?;
    let mut base = RunSpec::new(common::synthetic(dir.path(), 8), vec![AlgorithmSpec::new(common::icp_odometry())]);
    base.reconstruction_error = false;
    let swept = |name: &str, domain| SweptParameter {
        name: name.into(),
        domain,
    };
    let spec = SweepSpec {
        base,
        parameters: vec![
            swept("stride", Domain::List { values: vec![2i64.into(), 4i64.into(), 8i64.into()] }),
            swept("max-correspondence", Domain::Span { min: 0.02, max: 0.1, count: 3 }),
        ],
        strategy: Strategy::Grid,
        workers: 1,
    };
    let outcome = ok(run_sweep(&spec), "sweep")?;
    ensure(outcome.samples.len() == 9, || format!("{} samples", outcome.samples.len()))?;
    let points: Vec<Objectives> = outcome.samples.iter().filter_map(|s| s.objectives).collect();
    let dominated = outcome
        .front
        .members
        .iter()
        .filter(|m| points.iter().any(|p| p.dominates(&m.objectives.unwrap())))
        .count();
    ensure(dominated == 0 && !outcome.front.members.is_empty(), || format!("{dominated} dominated front members"))?;
    Ok(format!("1000 sets match brute force; 3x3 sweep front of {} with none dominated", outcome.front.members.len()))
}

// ---- plugin contract

fn view(f: &FrameRecord) -> FrameView<'_> {
    FrameView {
        timestamp: f.timestamp,
        sensor_index: f.sensor_index,
        payload: &f.payload,
    }
}

fn drive(h: &mut AlgorithmHandle, sensors: &[SensorDescriptor], frames: &[FrameRecord], stray: Option<u32>) -> Result<Vec<(Timestamp, Pose)>, String> {
    ok(h.new_configuration(), "configure")?;
    ok(h.set_sensors(sensors.to_vec()), "sensors")?;
    ok(h.init(), "init")?;
    ensure(h.process_once() == Err(ApiError::NotReady), || "processed before any frame".into())?;
    let imu = encode_imu(&ImuSample {
        gyro: [0.1, 0.2, 0.3],
        accel: [0.0, 0.0, 9.81],
    });
    let mut poses = Vec::new();
    for f in frames {
        if let Some(index) = stray {
            for s in [FrameRecord::new(f.timestamp, index, imu.clone()), FrameRecord::new(f.timestamp, index + 7, vec![0xAB; 5])] {
                ensure(!ok(h.update_frame(&view(&s)), "update")?, || format!("acted on sensor {}", s.sensor_index))?;
            }
        }
        if ok(h.update_frame(&view(f)), "update")? {
            ok(h.process_once(), "process")?;
            ok(h.update_outputs(), "outputs")?;
            if let Some((t, OutputData::Pose(p))) = h.channel(POSE_CHANNEL).and_then(|c| c.latest.clone()) {
                if poses.last().is_none_or(|l: &(Timestamp, Pose)| t > l.0) {
                    poses.push((t, p));
                }
            }
        }
    }
    ensure(!poses.is_empty(), || "no poses published".into())?;
    Ok(poses)
}

fn plugin_contract() -> Outcome {
    let dir = tempdir()?;
    let lifecycle = |r: Result<(), ApiError>| matches!(r, Err(ApiError::Lifecycle { .. }));
    for (lib, path) in [
        (common::gt_replay(), common::tiny(dir.path(), 20)),
        (common::noisy_replay(), common::tiny(dir.path(), 20)),
        (common::icp_odometry(), common::synthetic(dir.path(), 6)),
    ] {
        let name = slambench_core::api::library_name(&lib);
        let (sensors, frames) = common::delivery_order(&path, true);
        let fail = |e: String| format!("{name}: {e}");

        let mut h = ok(load_algorithm(&lib), &name)?;
        ensure(lifecycle(h.init()) && lifecycle(h.process_once()), || fail("init before configuration accepted".into()))?;
        let plain = drive(&mut h, &sensors, &frames, None).map_err(fail)?;
        ensure(lifecycle(h.init()), || fail("second init accepted".into()))?;
        ensure(h.set_sensors(sensors.clone()) == Err(ApiError::SensorsFrozen), || fail("sensors changed after init".into()))?;
        ok(h.clean(), &name)?;
        ensure(h.state() == LifecycleState::Finished && lifecycle(h.clean().map(drop)), || fail("clean twice accepted".into()))?;
        ensure(h.violations().is_empty(), || fail(format!("{:?}", h.violations())))?;

        let mut extra = sensors.clone();
        extra.push(SensorDescriptor::Imu(ImuParams {
            rate_hz: 200.0,
            gyro_noise: 0.0,
            accel_noise: 0.0,
        }));
        let mut h = ok(load_algorithm(&lib), &name)?;
        let with_stray = drive(&mut h, &extra, &frames, Some(sensors.len() as u32)).map_err(fail)?;
        ensure(with_stray == plain, || fail("unknown frames changed the trajectory".into()))?;

        let mut h = ok(load_algorithm(&lib), &name)?;
        ok(h.set_ui_enabled(true), &name)?;
        let with_ui = drive(&mut h, &sensors, &frames, None).map_err(fail)?;
        ensure(with_ui == plain, || fail("ui flag changed the trajectory".into()))?;
    }

    match load_algorithm(common::plugin("fixture_missing_symbol")) {
        Err(ApiError::MissingSymbol(s)) if s == "sb_process_once" => {}
        other => return Err(format!("missing symbol: {:?}", other.err())),
    }
    match load_algorithm(common::plugin("fixture_old_api")) {
        Err(ApiError::ApiVersionMismatch { found: 1, .. }) => {}
        other => return Err(format!("old api: {:?}", other.err())),
    }
    let mut h = ok(load_algorithm(common::plugin("fixture_dup_param")), "dup")?;
    ensure(matches!(h.new_configuration(), Err(ApiError::DuplicateParameter(_))), || "duplicate parameter accepted".into())?;

    let mut spec = RunSpec::new(common::tiny(dir.path(), 5), vec![AlgorithmSpec::new(common::workload()).with("alloc-init-mib", 64i64)]);
    spec.memory_probe = MemoryProbeKind::Alloc;
    let r = single(spec)?;
    ensure(r.metadata.memory_probe == MemoryProbeKind::Alloc, || format!("probe fell back: {:?}", r.metadata.memory_probe_fallback))?;
    let measured = r.metadata.memory_after_init.ok_or("no memory after init")? as f64;
    let mib = (64u64 << 20) as f64;
    ensure((mib..mib * 1.05).contains(&measured), || format!("64 MiB measured as {measured} B"))?;
    Ok(format!("three plugins conform when loaded; 64 MiB measured +{:.2}%", (measured / mib - 1.0) * 100.0))
}

// ---- CLI

fn cli_format() -> Outcome {
    let dir = tempdir()?;
    let path: PathBuf = common::tiny(dir.path(), 5);
    let out = ok(
        Command::new(env!("CARGO_BIN_EXE_sb_loader"))
            .args(["-i", path.to_str().unwrap(), "-load"])
            .arg(common::gt_replay())
            .arg("-load")
            .arg(common::noisy_replay())
            .args(["--noisy-replay-sigma-trans", "0.01", "--test-mode"])
            .env("RUST_LOG", "off")
            .output(),
        "sb_loader",
    )?;
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split('\t').collect();
    let want = [
        "frame",
        "timestamp",
        "gt-replay_duration",
        "gt-replay_memory",
        "gt-replay_ATE",
        "noisy-replay_duration",
        "noisy-replay_memory",
        "noisy-replay_ATE",
    ];
    ensure(header == want, || format!("header {header:?}"))?;
    let rows: Vec<&str> = lines.collect();
    ensure(rows.len() == 5, || format!("{} rows for 5 frames", rows.len()))?;
    for row in &rows {
        let fields: Vec<&str> = row.split('\t').collect();
        ensure(fields.len() == want.len() && fields.iter().all(|f| f.parse::<f64>().is_ok()), || format!("row {row:?}"))?;
    }
    Ok(format!("{} columns, two ATE columns, {} numeric rows", want.len(), rows.len()))
}

fn main() -> ExitCode {
    let checks: [Check; 9] = [
        ("datafile round-trip", datafile_round_trip),
        ("converter fidelity", converters),
        ("metric oracles", metric_oracles),
        ("alignment recovery", alignment),
        ("end-to-end oracle runs", end_to_end),
        ("dense pipeline", dense_pipeline),
        ("pareto correctness", pareto),
        ("plugin contract", plugin_contract),
        ("cli output format", cli_format),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1} s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{secs:.1} s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
