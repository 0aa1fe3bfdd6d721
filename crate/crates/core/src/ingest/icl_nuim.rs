use std::path::{Path, PathBuf};

use super::tum::{build_tum, TumIntrinsics, TumOptions};
use super::{ConversionSummary, IngestError, PendingFrame, Source};
use crate::datafile::payload::encode_point_cloud;
use crate::datafile::SensorDescriptor;
use crate::geometry::Timestamp;

/// fx, fy, cx, cy of the ICL-NUIM renderer (its negative fy flips the image
/// rows, which the TUM-compatible exports have already undone).
pub const ICL_NUIM_INTRINSICS: [f32; 4] = [481.2, 480.0, 319.5, 239.5];

/// Converts an ICL-NUIM sequence in its TUM-compatible layout. Ground truth
/// comes from `groundtruth.txt` or a `*.gt.freiburg` file; an optional
/// `scene.ply` (ASCII) or `scene.xyz` becomes one point-cloud frame at t=0.
pub fn convert_icl_nuim(dir: &Path, out: &Path, intrinsics: Option<TumIntrinsics>) -> Result<ConversionSummary, IngestError> {
    let options = TumOptions {
        intrinsics: intrinsics.unwrap_or(TumIntrinsics::Custom(ICL_NUIM_INTRINSICS, [0.0; 5])),
        ..TumOptions::default()
    };
    let mut conversion = build_tum(dir, &options, Some(groundtruth_file(dir)))?;
    if let Some(path) = scene_file(dir) {
        let points = read_point_cloud(&path)?;
        let index = conversion.sensors.len() as u32;
        conversion.sensors.push(("gt_point_cloud".to_string(), SensorDescriptor::GtPointCloud));
        conversion.frames.push(PendingFrame {
            timestamp: Timestamp::default(),
            sensor: index,
            source: Source::Bytes(encode_point_cloud(&points)),
        });
    }
    conversion.write(out)
}

fn groundtruth_file(dir: &Path) -> PathBuf {
    let default = dir.join("groundtruth.txt");
    if default.is_file() {
        return default;
    }
    let mut candidates: Vec<PathBuf> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.to_string_lossy().ends_with(".gt.freiburg"))
        .collect();
    candidates.sort();
    candidates.into_iter().next().unwrap_or(default)
}

fn scene_file(dir: &Path) -> Option<PathBuf> {
    ["scene.ply", "scene.xyz"].iter().map(|n| dir.join(n)).find(|p| p.is_file())
}

/// Reads an ASCII PLY (vertex x/y/z properties) or a whitespace `.xyz` file.
pub(crate) fn read_point_cloud(path: &Path) -> Result<Vec<[f32; 3]>, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    let malformed = |reason: String| IngestError::MalformedPointCloud {
        path: path.to_path_buf(),
        reason,
    };
    let parse_xyz = |n: usize, fields: &[&str], cols: [usize; 3]| -> Result<[f32; 3], IngestError> {
        let mut p = [0.0f32; 3];
        for (dst, &c) in p.iter_mut().zip(&cols) {
            *dst = fields
                .get(c)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| malformed(format!("line {n}: bad vertex")))?;
        }
        Ok(p)
    };

    if !text.starts_with("ply") {
        return text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|(i, l)| {
                let fields: Vec<&str> = l.split_whitespace().collect();
                parse_xyz(i + 1, &fields, [0, 1, 2])
            })
            .collect();
    }

    let mut lines = text.lines().enumerate();
    let mut count = None;
    let mut in_vertex = false;
    let mut properties = Vec::new();
    let mut ascii = false;
    for (_, line) in lines.by_ref() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["format", "ascii", ..] => ascii = true,
            ["format", other, ..] => return Err(malformed(format!("unsupported PLY format {other}"))),
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|_| malformed(format!("bad vertex count {n}")))?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", .., name] if in_vertex => properties.push(name.to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    if !ascii {
        return Err(malformed("missing `format ascii` line".into()));
    }
    let count = count.ok_or_else(|| malformed("no vertex element".into()))?;
    let col = |name: &str| {
        properties
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| malformed(format!("vertex has no `{name}` property")))
    };
    let cols = [col("x")?, col("y")?, col("z")?];
    let mut points = Vec::with_capacity(count);
    for (i, line) in lines.take(count) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        points.push(parse_xyz(i + 1, &fields, cols)?);
    }
    if points.len() != count {
        return Err(malformed(format!("header declares {count} vertices, file has {}", points.len())));
    }
    Ok(points)
}
