use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::{estimate_rate, raster, Conversion, ConversionSummary, IngestError, PendingFrame, Source};
use crate::datafile::payload::{encode_imu, encode_pose, ImuSample};
use crate::datafile::{CameraParams, ImuParams, PixelFormat, SensorDescriptor};
use crate::geometry::{Pose, Timestamp, Vec3};

/// cam0 calibration of the EuRoC MAV rig, used when `sensor.yaml` is absent.
const DEFAULT_INTRINSICS: [f32; 4] = [458.654, 457.296, 367.215, 248.375];
const DEFAULT_DISTORTION: [f32; 5] = [-0.283_408_1, 0.073_959_07, 0.000_193_59, 1.761_871_1e-5, 0.0];

/// Converts an EuRoC MAV sequence (`mav0/` or its parent). Camera images are
/// stored as raw GREY8 rasters.
pub fn convert_euroc(dir: &Path, out: &Path) -> Result<ConversionSummary, IngestError> {
    let root = if dir.join("mav0").is_dir() { dir.join("mav0") } else { dir.to_path_buf() };
    let mut sensors = Vec::new();
    let mut frames = Vec::new();
    let mut notes = Vec::new();

    for cam in ["cam0", "cam1"] {
        let csv = root.join(cam).join("data.csv");
        if cam == "cam1" && !csv.is_file() {
            continue;
        }
        let rows = read_csv(&csv, 2, 2)?;
        let images: Vec<(Timestamp, PathBuf)> = rows
            .into_iter()
            .map(|(t, fields)| (t, root.join(cam).join("data").join(&fields[1])))
            .collect();
        let yaml = read_yaml(&root.join(cam).join("sensor.yaml"));
        let (width, height) = match (yaml_list(&yaml, "resolution"), images.first()) {
            (Some(r), _) if r.len() == 2 => (r[0] as u32, r[1] as u32),
            (_, Some((_, path))) => {
                let r = raster::read_raster(path)?;
                (r.width, r.height)
            }
            _ => (752, 480),
        };
        let k = yaml_list(&yaml, "intrinsics")
            .filter(|k| k.len() == 4)
            .map(|k| [k[0] as f32, k[1] as f32, k[2] as f32, k[3] as f32])
            .unwrap_or(DEFAULT_INTRINSICS);
        let mut distortion = [0.0f32; 5];
        match yaml_list(&yaml, "distortion_coefficients") {
            Some(d) => d.iter().take(5).enumerate().for_each(|(i, v)| distortion[i] = *v as f32),
            None => distortion = DEFAULT_DISTORTION,
        }
        let stamps: Vec<Timestamp> = images.iter().map(|(t, _)| *t).collect();
        let rate = yaml_scalar(&yaml, "rate_hz").map(|r| r as f32).unwrap_or_else(|| estimate_rate(&stamps));
        let index = sensors.len() as u32;
        sensors.push((
            cam.to_string(),
            SensorDescriptor::CameraGrey(CameraParams {
                width,
                height,
                pixel_format: PixelFormat::Grey8,
                rate_hz: rate,
                fx: k[0],
                fy: k[1],
                cx: k[2],
                cy: k[3],
                distortion,
                depth_scale: 0.0,
            }),
        ));
        frames.extend(images.into_iter().map(|(timestamp, path)| PendingFrame {
            timestamp,
            sensor: index,
            source: Source::Raster(path),
        }));
    }

    let imu_csv = root.join("imu0").join("data.csv");
    if imu_csv.is_file() {
        let rows = read_csv(&imu_csv, 7, 7)?;
        let yaml = read_yaml(&root.join("imu0").join("sensor.yaml"));
        let stamps: Vec<Timestamp> = rows.iter().map(|(t, _)| *t).collect();
        let index = sensors.len() as u32;
        sensors.push((
            "imu0".to_string(),
            SensorDescriptor::Imu(ImuParams {
                rate_hz: yaml_scalar(&yaml, "rate_hz").map(|r| r as f32).unwrap_or_else(|| estimate_rate(&stamps)),
                gyro_noise: yaml_scalar(&yaml, "gyroscope_noise_density").unwrap_or(0.0) as f32,
                accel_noise: yaml_scalar(&yaml, "accelerometer_noise_density").unwrap_or(0.0) as f32,
            }),
        ));
        for (line, (timestamp, fields)) in rows.into_iter().enumerate() {
            let v = floats(&imu_csv, line + 2, &fields[1..7])?;
            let sample = ImuSample {
                gyro: [v[0] as f32, v[1] as f32, v[2] as f32],
                accel: [v[3] as f32, v[4] as f32, v[5] as f32],
            };
            frames.push(PendingFrame {
                timestamp,
                sensor: index,
                source: Source::Bytes(encode_imu(&sample)),
            });
        }
    } else {
        notes.push("no imu0/data.csv".to_string());
    }

    let gt_index = sensors.len() as u32;
    sensors.push(("gt_pose".to_string(), SensorDescriptor::GtPose));
    let gt_csv = root.join("state_groundtruth_estimate0").join("data.csv");
    if gt_csv.is_file() {
        for (line, (timestamp, fields)) in read_csv(&gt_csv, 8, usize::MAX)?.into_iter().enumerate() {
            let v = floats(&gt_csv, line + 2, &fields[1..8])?;
            let pose = Pose::from_wxyz(v[3], v[4], v[5], v[6], Vec3::new(v[0], v[1], v[2])).map_err(|e| {
                IngestError::UnparseableLine {
                    file: gt_csv.clone(),
                    line: line + 2,
                    reason: e.to_string(),
                }
            })?;
            frames.push(PendingFrame {
                timestamp,
                sensor: gt_index,
                source: Source::Bytes(encode_pose(&pose)),
            });
        }
    } else {
        notes.push("no state_groundtruth_estimate0/data.csv".to_string());
    }

    Conversion { sensors, frames, notes }.write(out)
}

/// Rows of an EuRoC CSV as (timestamp, all fields). The header must start
/// with a timestamp column and have between `min` and `max` columns.
fn read_csv(path: &Path, min: usize, max: usize) -> Result<Vec<(Timestamp, Vec<String>)>, IngestError> {
    if !path.is_file() {
        return Err(IngestError::MissingListFile(path.to_path_buf()));
    }
    let bad_header = |reason: String| IngestError::BadCsvHeader {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| bad_header(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad_header(e.to_string()))?.clone();
    let first = header.get(0).unwrap_or("");
    if !first.trim_start_matches('#').trim().starts_with("timestamp") {
        return Err(bad_header(format!("first column is {first:?}, expected a timestamp")));
    }
    if header.len() < min || header.len() > max {
        return Err(bad_header(format!("{} columns", header.len())));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let unparseable = |reason: String| IngestError::UnparseableLine {
            file: path.to_path_buf(),
            line,
            reason,
        };
        let record = record.map_err(|e| unparseable(e.to_string()))?;
        if record.len() != header.len() {
            return Err(unparseable(format!("{} fields, header has {}", record.len(), header.len())));
        }
        let nanos: u64 = record[0]
            .parse()
            .map_err(|_| unparseable(format!("bad timestamp {:?}", &record[0])))?;
        let timestamp = Timestamp::from_nanos(nanos).map_err(|e| unparseable(e.to_string()))?;
        rows.push((timestamp, record.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

fn floats(path: &Path, line: usize, fields: &[String]) -> Result<Vec<f64>, IngestError> {
    fields
        .iter()
        .map(|f| {
            f.parse().map_err(|_| IngestError::UnparseableLine {
                file: path.to_path_buf(),
                line,
                reason: format!("not a number: {f:?}"),
            })
        })
        .collect()
}

/// Top-level `key: value` pairs of a sensor.yaml; nested blocks such as
/// `T_BS` are skipped. Missing files read as empty.
fn read_yaml(path: &Path) -> HashMap<String, String> {
    let text = std::fs::read_to_string(path).unwrap_or_default();
    text.lines()
        .filter(|l| !l.starts_with(' ') && !l.starts_with('#'))
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.split('#').next().unwrap_or("").trim().to_string()))
        .collect()
}

fn yaml_scalar(yaml: &HashMap<String, String>, key: &str) -> Option<f64> {
    yaml.get(key)?.parse().ok()
}

fn yaml_list(yaml: &HashMap<String, String>, key: &str) -> Option<Vec<f64>> {
    let v = yaml.get(key)?.trim();
    let inner = v.strip_prefix('[')?.strip_suffix(']')?;
    inner.split(',').map(|s| s.trim().parse().ok()).collect()
}
