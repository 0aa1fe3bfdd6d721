//! Reference algorithms exercising the full plugin contract.
//!
//! - [`GtReplay`] republishes ground truth, giving an exact zero-error run.
//! - [`NoisyReplay`] perturbs ground truth with seeded noise and drift.
//! - [`IcpOdometry`] is a small frame-to-frame dense depth odometry.
//!
//! The replay algorithms consume ground-truth frames, which the harness only
//! forwards in test mode.

mod gt_replay;
mod icp_odometry;
mod noisy_replay;

pub use gt_replay::GtReplay;
pub use icp_odometry::IcpOdometry;
pub use noisy_replay::NoisyReplay;

use slambench_core::datafile::{SensorDescriptor, SensorType};

fn find_sensor(sensors: &[SensorDescriptor], ty: SensorType) -> Option<u32> {
    sensors.iter().position(|s| s.sensor_type() == ty).map(|i| i as u32)
}
