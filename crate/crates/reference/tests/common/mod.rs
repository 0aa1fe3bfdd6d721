#![allow(dead_code)]

use std::path::Path;

use slambench_core::api::{AlgorithmHandle, FrameView, OutputData, POSE_CHANNEL};
use slambench_core::datafile::payload::decode_pose;
use slambench_core::datafile::{Datafile, SensorType};
use slambench_core::geometry::Timestamp;
use slambench_core::metrics::TrajectorySample;

pub struct Run {
    pub estimates: Vec<TrajectorySample>,
    pub ground_truth: Vec<TrajectorySample>,
    pub map: Vec<[f32; 3]>,
    pub handle: AlgorithmHandle,
}

/// Minimal in-process driver: every frame whose delivery warrants a step
/// triggers process and output refresh. Ground-truth frames go first at
/// equal timestamps and are delivered only when `forward_gt` is set.
pub fn drive(mut handle: AlgorithmHandle, path: &Path, params: &[(&str, &str)], forward_gt: bool) -> Run {
    let file = Datafile::open(path).unwrap();
    handle.new_configuration().unwrap();
    for (k, v) in params {
        handle.set_parameter_str(k, v).unwrap();
    }
    handle.set_sensors(file.sensors().to_vec()).unwrap();
    handle.init().unwrap();

    let mut ground_truth = Vec::new();
    let mut gt_frames = Vec::new();
    let mut cursor = file.gt_frames().unwrap();
    while let Some(f) = cursor.next_record().unwrap() {
        if file.sensors()[f.sensor_index as usize].sensor_type() == SensorType::GtPose {
            ground_truth.push(TrajectorySample::new(f.timestamp, decode_pose(&f.payload).unwrap()));
        }
        gt_frames.push(f);
    }
    let mut frames = Vec::new();
    let mut cursor = file.input_frames().unwrap();
    while let Some(f) = cursor.next_record().unwrap() {
        frames.push(f);
    }
    let mut all: Vec<_> = if forward_gt { gt_frames.into_iter().map(|f| (0, f)).collect() } else { Vec::new() };
    all.extend(frames.into_iter().map(|f| (1, f)));
    all.sort_by_key(|(order, f)| (f.timestamp, *order));

    let mut estimates: Vec<TrajectorySample> = Vec::new();
    let mut map = Vec::new();
    let mut last = None::<Timestamp>;
    for (_, f) in &all {
        let view = FrameView {
            timestamp: f.timestamp,
            sensor_index: f.sensor_index,
            payload: &f.payload,
        };
        if !handle.update_frame(&view).unwrap() {
            continue;
        }
        handle.process_once().unwrap();
        handle.update_outputs().unwrap();
        if let Some((t, OutputData::Pose(p))) = handle.channel(POSE_CHANNEL).and_then(|c| c.latest.clone()) {
            if last.is_none_or(|l| t > l) {
                estimates.push(TrajectorySample::new(t, p));
                last = Some(t);
            }
        }
        if let Some((_, OutputData::Points(points))) = handle.channel("map").and_then(|c| c.latest.clone()) {
            map.extend(points);
        }
    }
    Run {
        estimates,
        ground_truth,
        map,
        handle,
    }
}

pub fn synthetic(dir: &Path, cfg: &slambench_core::ingest::SyntheticSceneConfig) -> std::path::PathBuf {
    let path = dir.join("synthetic.slam");
    slambench_core::ingest::generate_synthetic(cfg, &path).unwrap();
    path
}

/// A long, tiny-image synthetic sequence for replay tests.
pub fn long_sequence(frames: u32) -> slambench_core::ingest::SyntheticSceneConfig {
    let defaults = slambench_core::ingest::SyntheticSceneConfig::default();
    slambench_core::ingest::SyntheticSceneConfig {
        width: 8,
        height: 6,
        intrinsics: slambench_core::camera::PinholeIntrinsics {
            fx: 4.0,
            fy: 4.0,
            cx: 3.5,
            cy: 2.5,
        },
        frames,
        angular_rate: 0.003,
        cloud_spacing: 0.5,
        ..defaults
    }
}
