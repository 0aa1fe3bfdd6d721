#![allow(dead_code)]

use std::path::{Path, PathBuf};

use slambench_core::camera::PinholeIntrinsics;
use slambench_core::ingest::{generate_synthetic, SyntheticSceneConfig};

/// A plugin library built alongside the tests (`gt_replay` →
/// `target/<profile>/deps/libgt_replay.so`). The copy one level up is only
/// refreshed by explicit builds, so it is the fallback.
pub fn plugin(lib: &str) -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap();
    let file = format!("{}{lib}{}", std::env::consts::DLL_PREFIX, std::env::consts::DLL_SUFFIX);
    for dir in [deps, deps.parent().unwrap()] {
        let candidate = dir.join(&file);
        if candidate.is_file() {
            return candidate;
        }
    }
    panic!("{file} not built next to {}", deps.display());
}

pub fn gt_replay() -> PathBuf {
    plugin("gt_replay")
}

pub fn noisy_replay() -> PathBuf {
    plugin("noisy_replay")
}

pub fn icp_odometry() -> PathBuf {
    plugin("icp_odometry")
}

pub fn workload() -> PathBuf {
    plugin("fixture_workload")
}

/// Default synthetic room with `frames` frames.
pub fn synthetic(dir: &Path, frames: u32) -> PathBuf {
    let cfg = SyntheticSceneConfig {
        frames,
        ..SyntheticSceneConfig::default()
    };
    synthetic_with(dir, &cfg)
}

pub fn synthetic_with(dir: &Path, cfg: &SyntheticSceneConfig) -> PathBuf {
    let path = dir.join(format!("synthetic-{}-{}x{}.slam", cfg.frames, cfg.width, cfg.height));
    if !path.exists() {
        generate_synthetic(cfg, &path).unwrap();
    }
    path
}

/// Tiny-image synthetic sequence, cheap enough for long replay runs.
pub fn tiny(dir: &Path, frames: u32) -> PathBuf {
    let defaults = SyntheticSceneConfig::default();
    let cfg = SyntheticSceneConfig {
        width: 8,
        height: 6,
        intrinsics: PinholeIntrinsics {
            fx: 4.0,
            fy: 4.0,
            cx: 3.5,
            cy: 2.5,
        },
        frames,
        angular_rate: 0.003,
        cloud_spacing: 0.5,
        ..defaults
    };
    synthetic_with(dir, &cfg)
}

/// Frames of a datafile in delivery order: ground truth first at equal
/// timestamps, only when `forward_gt` is set.
pub fn delivery_order(path: &Path, forward_gt: bool) -> (Vec<slambench_core::datafile::SensorDescriptor>, Vec<slambench_core::datafile::FrameRecord>) {
    let contents = slambench_core::datafile::read_datafile(path).unwrap();
    let mut all: Vec<_> = if forward_gt {
        contents.gt_frames.into_iter().map(|f| (0, f)).collect()
    } else {
        Vec::new()
    };
    all.extend(contents.in_frames.into_iter().map(|f| (1, f)));
    all.sort_by_key(|(order, f)| (f.timestamp, *order));
    (contents.sensors, all.into_iter().map(|(_, f)| f).collect())
}
