//! Seeded generators of valid datafile contents, used by property tests
//! and large-file streaming checks.

use rand::Rng;

use crate::geometry::{Pose, Timestamp, Vec3};

use super::format::{CameraParams, ImuParams, PayloadLen, PixelFormat, SensorDescriptor};
use super::payload::{encode_point_cloud, encode_pose};
use super::{DatafileContents, FrameRecord};

pub fn random_sensor(rng: &mut impl Rng) -> SensorDescriptor {
    let camera = |rng: &mut dyn rand::RngCore, format: PixelFormat| {
        let width = rng.random_range(1..=6);
        let height = rng.random_range(1..=5);
        CameraParams {
            width,
            height,
            pixel_format: format,
            rate_hz: rng.random_range(1.0..60.0),
            fx: rng.random_range(1.0..600.0),
            fy: rng.random_range(1.0..600.0),
            cx: rng.random_range(0.0..width as f32),
            cy: rng.random_range(0.0..height as f32),
            distortion: [0.0; 5].map(|_| rng.random_range(-1.0..1.0)),
            depth_scale: if format == PixelFormat::Depth16 { rng.random_range(1e-4..1e-2) } else { 0.0 },
        }
    };
    match rng.random_range(0..6) {
        0 => SensorDescriptor::CameraRgb(camera(rng, PixelFormat::Rgb8)),
        1 => SensorDescriptor::CameraGrey(camera(rng, PixelFormat::Grey8)),
        2 => SensorDescriptor::CameraDepth(camera(rng, PixelFormat::Depth16)),
        3 => SensorDescriptor::Imu(ImuParams {
            rate_hz: rng.random_range(1.0..400.0),
            gyro_noise: rng.random_range(0.0..0.1),
            accel_noise: rng.random_range(0.0..0.1),
        }),
        4 => SensorDescriptor::GtPose,
        _ => SensorDescriptor::GtPointCloud,
    }
}

pub fn random_payload(rng: &mut impl Rng, sensor: &SensorDescriptor) -> Vec<u8> {
    match (sensor, sensor.payload_len()) {
        (SensorDescriptor::GtPose, _) => {
            let pose = Pose::from_axis_angle(
                Vec3::new(rng.random(), rng.random(), rng.random()),
                rng.random_range(-3.0..3.0),
                Vec3::new(rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0)),
            );
            encode_pose(&pose)
        }
        (_, PayloadLen::PointCloud) => {
            let n = rng.random_range(0..8);
            let pts: Vec<[f32; 3]> = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
            encode_point_cloud(&pts)
        }
        (_, PayloadLen::Fixed(n)) => (0..n).map(|_| rng.random()).collect(),
    }
}

fn random_frames(rng: &mut impl Rng, sensors: &[SensorDescriptor], gt: bool, count: usize) -> Vec<FrameRecord> {
    let eligible: Vec<u32> = (0..sensors.len() as u32)
        .filter(|&i| sensors[i as usize].is_ground_truth() == gt)
        .collect();
    if eligible.is_empty() {
        return Vec::new();
    }
    let mut nanos: u64 = rng.random_range(0..5_000_000_000);
    (0..count)
        .map(|_| {
            // repeated timestamps are allowed and must survive in order
            if rng.random_bool(0.8) {
                nanos += rng.random_range(0..100_000_000);
            }
            let sensor_index = eligible[rng.random_range(0..eligible.len())];
            FrameRecord {
                timestamp: Timestamp::from_nanos(nanos).expect("in range"),
                sensor_index,
                payload: random_payload(rng, &sensors[sensor_index as usize]),
            }
        })
        .collect()
}

/// A small valid datafile with 1-5 sensors and up to 20 frames per section.
pub fn random_contents(rng: &mut impl Rng) -> DatafileContents {
    let n_sensors = rng.random_range(1..=5);
    let sensors: Vec<SensorDescriptor> = (0..n_sensors).map(|_| random_sensor(rng)).collect();
    let n_gt = rng.random_range(0..20);
    let n_in = rng.random_range(0..20);
    let gt_frames = random_frames(rng, &sensors, true, n_gt);
    let in_frames = random_frames(rng, &sensors, false, n_in);
    DatafileContents {
        sensors,
        gt_frames,
        in_frames,
    }
}
