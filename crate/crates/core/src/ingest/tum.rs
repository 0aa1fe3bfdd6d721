use std::path::{Path, PathBuf};

use super::{estimate_rate, list_lines, raster, Conversion, ConversionSummary, IngestError, PendingFrame, Source};
use crate::datafile::payload::{encode_imu, encode_pose, ImuSample};
use crate::datafile::{CameraParams, ImuParams, PixelFormat, SensorDescriptor};
use crate::geometry::{Pose, Timestamp, Vec3};

/// Calibration to attach to TUM cameras; the dataset ships it only on its
/// website, per recording rig.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum TumIntrinsics {
    /// Pick a Freiburg preset from the directory name, else the ROS default.
    #[default]
    Auto,
    Freiburg1,
    Freiburg2,
    Freiburg3,
    /// fx 525, fy 525, cx 319.5, cy 239.5, no distortion.
    RosDefault,
    /// fx, fy, cx, cy and OpenCV distortion.
    Custom([f32; 4], [f32; 5]),
}

impl TumIntrinsics {
    fn resolve(self, dir: &Path) -> ([f32; 4], [f32; 5]) {
        match self {
            TumIntrinsics::Auto => {
                let name = dir
                    .canonicalize()
                    .unwrap_or_else(|_| dir.to_path_buf())
                    .file_name()
                    .map(|n| n.to_string_lossy().to_lowercase())
                    .unwrap_or_default();
                let preset = if name.contains("freiburg1") || name.contains("fr1") {
                    TumIntrinsics::Freiburg1
                } else if name.contains("freiburg2") || name.contains("fr2") {
                    TumIntrinsics::Freiburg2
                } else if name.contains("freiburg3") || name.contains("fr3") {
                    TumIntrinsics::Freiburg3
                } else {
                    TumIntrinsics::RosDefault
                };
                preset.resolve(dir)
            }
            TumIntrinsics::Freiburg1 => (
                [517.3, 516.5, 318.6, 255.3],
                [0.2624, -0.9531, -0.0054, 0.0026, 1.1633],
            ),
            TumIntrinsics::Freiburg2 => (
                [520.9, 521.0, 325.1, 249.7],
                [0.2312, -0.7849, -0.0033, -0.0001, 0.9172],
            ),
            TumIntrinsics::Freiburg3 => ([535.4, 539.2, 320.1, 247.6], [0.0; 5]),
            TumIntrinsics::RosDefault => ([525.0, 525.0, 319.5, 239.5], [0.0; 5]),
            TumIntrinsics::Custom(k, d) => (k, d),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TumOptions {
    pub intrinsics: TumIntrinsics,
    /// Meters per raw depth unit.
    pub depth_scale: f32,
}

impl Default for TumOptions {
    fn default() -> Self {
        Self {
            intrinsics: TumIntrinsics::Auto,
            depth_scale: 1.0 / 5000.0,
        }
    }
}

pub fn convert_tum(dir: &Path, out: &Path, options: &TumOptions) -> Result<ConversionSummary, IngestError> {
    build_tum(dir, options, None)?.write(out)
}

/// Builds a TUM-layout conversion; `gt_file` overrides `groundtruth.txt`.
pub(crate) fn build_tum(dir: &Path, options: &TumOptions, gt_file: Option<PathBuf>) -> Result<Conversion, IngestError> {
    let rgb = read_image_list(&dir.join("rgb.txt"), dir)?;
    let depth = read_image_list(&dir.join("depth.txt"), dir)?;
    let gt_path = gt_file.unwrap_or_else(|| dir.join("groundtruth.txt"));
    let mut notes = Vec::new();
    let gt = if gt_path.is_file() {
        read_groundtruth(&gt_path)?
    } else {
        notes.push(format!("no ground truth at {}", gt_path.display()));
        Vec::new()
    };
    let accel_path = dir.join("accelerometer.txt");
    let accel = if accel_path.is_file() {
        notes.push("imu: accelerometer only, gyro set to zero".to_string());
        Some(read_accelerometer(&accel_path)?)
    } else {
        None
    };

    let (k, distortion) = options.intrinsics.resolve(dir);
    let camera = |list: &[(Timestamp, PathBuf)], format: PixelFormat| -> Result<CameraParams, IngestError> {
        let (width, height) = match list.first() {
            Some((_, path)) => {
                let r = raster::read_raster(path)?;
                (r.width, r.height)
            }
            None => (640, 480),
        };
        let stamps: Vec<Timestamp> = list.iter().map(|(t, _)| *t).collect();
        Ok(CameraParams {
            width,
            height,
            pixel_format: format,
            rate_hz: estimate_rate(&stamps),
            fx: k[0],
            fy: k[1],
            cx: k[2],
            cy: k[3],
            distortion,
            depth_scale: if format == PixelFormat::Depth16 { options.depth_scale } else { 0.0 },
        })
    };

    let mut sensors = vec![
        ("rgb".to_string(), SensorDescriptor::CameraRgb(camera(&rgb, PixelFormat::Rgb8)?)),
        ("depth".to_string(), SensorDescriptor::CameraDepth(camera(&depth, PixelFormat::Depth16)?)),
    ];
    let mut frames = Vec::new();
    for (timestamp, path) in rgb {
        frames.push(PendingFrame {
            timestamp,
            sensor: 0,
            source: Source::Raster(path),
        });
    }
    for (timestamp, path) in depth {
        frames.push(PendingFrame {
            timestamp,
            sensor: 1,
            source: Source::Raster(path),
        });
    }
    if let Some(accel) = accel {
        let index = sensors.len() as u32;
        let stamps: Vec<Timestamp> = accel.iter().map(|(t, _)| *t).collect();
        sensors.push((
            "imu".to_string(),
            SensorDescriptor::Imu(ImuParams {
                rate_hz: estimate_rate(&stamps),
                gyro_noise: 0.0,
                accel_noise: 0.0,
            }),
        ));
        for (timestamp, a) in accel {
            let sample = ImuSample {
                gyro: [0.0; 3],
                accel: a,
            };
            frames.push(PendingFrame {
                timestamp,
                sensor: index,
                source: Source::Bytes(encode_imu(&sample)),
            });
        }
    }
    let gt_index = sensors.len() as u32;
    sensors.push(("gt_pose".to_string(), SensorDescriptor::GtPose));
    for (timestamp, pose) in gt {
        frames.push(PendingFrame {
            timestamp,
            sensor: gt_index,
            source: Source::Bytes(encode_pose(&pose)),
        });
    }
    Ok(Conversion { sensors, frames, notes })
}

fn read_list(path: &Path) -> Result<String, IngestError> {
    if !path.is_file() {
        return Err(IngestError::MissingListFile(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))
}

fn unparseable(path: &Path, line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::UnparseableLine {
        file: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn parse_stamp(path: &Path, line: usize, field: &str) -> Result<Timestamp, IngestError> {
    field.parse().map_err(|e: crate::geometry::GeometryError| unparseable(path, line, e.to_string()))
}

fn parse_floats<const N: usize>(path: &Path, line: usize, fields: &[&str]) -> Result<[f64; N], IngestError> {
    if fields.len() != N {
        return Err(unparseable(path, line, format!("expected {N} values, found {}", fields.len())));
    }
    let mut out = [0.0; N];
    for (dst, f) in out.iter_mut().zip(fields) {
        *dst = f
            .parse()
            .map_err(|_| unparseable(path, line, format!("not a number: {f:?}")))?;
    }
    Ok(out)
}

/// `timestamp filename` lines; filenames are relative to `root`.
fn read_image_list(path: &Path, root: &Path) -> Result<Vec<(Timestamp, PathBuf)>, IngestError> {
    let text = read_list(path)?;
    list_lines(&text)
        .map(|(n, fields)| {
            if fields.len() != 2 {
                return Err(unparseable(path, n, "expected `timestamp filename`"));
            }
            Ok((parse_stamp(path, n, fields[0])?, root.join(fields[1])))
        })
        .collect()
}

/// `timestamp tx ty tz qx qy qz qw` lines.
pub(crate) fn read_groundtruth(path: &Path) -> Result<Vec<(Timestamp, Pose)>, IngestError> {
    let text = read_list(path)?;
    list_lines(&text)
        .map(|(n, fields)| {
            if fields.len() != 8 {
                return Err(unparseable(path, n, "expected `timestamp tx ty tz qx qy qz qw`"));
            }
            let t = parse_stamp(path, n, fields[0])?;
            let [tx, ty, tz, qx, qy, qz, qw] = parse_floats::<7>(path, n, &fields[1..])?;
            let pose = Pose::from_wxyz(qw, qx, qy, qz, Vec3::new(tx, ty, tz))
                .map_err(|e| unparseable(path, n, e.to_string()))?;
            Ok((t, pose))
        })
        .collect()
}

/// `timestamp ax ay az` lines.
fn read_accelerometer(path: &Path) -> Result<Vec<(Timestamp, [f32; 3])>, IngestError> {
    let text = read_list(path)?;
    list_lines(&text)
        .map(|(n, fields)| {
            if fields.len() != 4 {
                return Err(unparseable(path, n, "expected `timestamp ax ay az`"));
            }
            let t = parse_stamp(path, n, fields[0])?;
            let [x, y, z] = parse_floats::<3>(path, n, &fields[1..])?;
            Ok((t, [x as f32, y as f32, z as f32]))
        })
        .collect()
}
