//! Converters from public dataset layouts into datafiles, plus a synthetic
//! room generator with an analytic ground truth.

mod euroc;
mod icl_nuim;
mod raster;
mod synthetic;
mod tum;
pub mod testing;

use std::fmt;
use std::path::{Path, PathBuf};

use crate::datafile::{DatafileError, DatafileWriter, SensorDescriptor};
use crate::geometry::Timestamp;

pub use euroc::convert_euroc;
pub use icl_nuim::{convert_icl_nuim, ICL_NUIM_INTRINSICS};
pub use raster::{read_raster, Raster};
pub use synthetic::{generate_synthetic, render_depth, SyntheticSceneConfig};
pub use tum::{convert_tum, TumIntrinsics, TumOptions};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("missing list file {0}")]
    MissingListFile(PathBuf),
    #[error("{}:{line}: {reason}", file.display())]
    UnparseableLine { file: PathBuf, line: usize, reason: String },
    #[error("missing raster {0}")]
    MissingRaster(PathBuf),
    #[error("unsupported raster {}: {reason}", path.display())]
    UnsupportedRaster { path: PathBuf, reason: String },
    #[error("malformed point cloud {}: {reason}", path.display())]
    MalformedPointCloud { path: PathBuf, reason: String },
    #[error("bad CSV header in {}: {reason}", path.display())]
    BadCsvHeader { path: PathBuf, reason: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Datafile(#[from] DatafileError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Frames written per sensor by a conversion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConversionSummary {
    pub output: PathBuf,
    /// `(label, frame count)` in sensor-table order.
    pub sensors: Vec<(String, usize)>,
    /// Remarks about lossy or guessed mappings.
    pub notes: Vec<String>,
}

impl ConversionSummary {
    pub fn frames(&self, label: &str) -> Option<usize> {
        self.sensors.iter().find(|(l, _)| l == label).map(|(_, n)| *n)
    }
}

impl fmt::Display for ConversionSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, n) in &self.sensors {
            writeln!(f, "{label} {n}")?;
        }
        Ok(())
    }
}

/// Where a frame's payload comes from; rasters are only read while writing
/// so a conversion holds one image at a time.
pub(crate) enum Source {
    Bytes(Vec<u8>),
    Raster(PathBuf),
}

pub(crate) struct PendingFrame {
    pub timestamp: Timestamp,
    pub sensor: u32,
    pub source: Source,
}

/// Labelled sensor table plus every frame, in any order.
pub(crate) struct Conversion {
    pub sensors: Vec<(String, SensorDescriptor)>,
    pub frames: Vec<PendingFrame>,
    pub notes: Vec<String>,
}

impl Conversion {
    /// Sorts by (timestamp, sensor index) keeping input order for ties,
    /// then streams the file out.
    pub fn write(mut self, out: &Path) -> Result<ConversionSummary, IngestError> {
        self.frames.sort_by_key(|f| (f.timestamp, f.sensor));
        let descriptors: Vec<SensorDescriptor> = self.sensors.iter().map(|(_, d)| *d).collect();
        let mut counts = vec![0usize; descriptors.len()];
        let result = (|| {
            let mut writer = DatafileWriter::create(out, &descriptors)?;
            let (gt, input): (Vec<_>, Vec<_>) = self
                .frames
                .iter()
                .partition(|f| descriptors[f.sensor as usize].is_ground_truth());
            for frame in gt.into_iter().chain(input) {
                let payload = match &frame.source {
                    Source::Bytes(b) => std::borrow::Cow::Borrowed(b.as_slice()),
                    Source::Raster(path) => {
                        let descriptor = &descriptors[frame.sensor as usize];
                        std::borrow::Cow::Owned(raster::load_for(path, descriptor)?)
                    }
                };
                if descriptors[frame.sensor as usize].is_ground_truth() {
                    writer.write_gt_frame(frame.timestamp, frame.sensor, &payload)?;
                } else {
                    writer.write_input_frame(frame.timestamp, frame.sensor, &payload)?;
                }
                counts[frame.sensor as usize] += 1;
            }
            writer.finish()?;
            Ok::<_, IngestError>(())
        })();
        if let Err(e) = result {
            let _ = std::fs::remove_file(out);
            return Err(e);
        }
        Ok(ConversionSummary {
            output: out.to_path_buf(),
            sensors: self.sensors.into_iter().map(|(l, _)| l).zip(counts).collect(),
            notes: self.notes,
        })
    }
}

/// Whitespace-separated lines with `#` comments; yields (line number, fields).
pub(crate) fn list_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

/// Sensor rate from the spread of its timestamps, 0 when unknown.
pub(crate) fn estimate_rate(stamps: &[Timestamp]) -> f32 {
    match (stamps.first(), stamps.last()) {
        (Some(a), Some(b)) if stamps.len() > 1 && b > a => ((stamps.len() - 1) as f64 / b.secs_since(*a)) as f32,
        _ => 0.0,
    }
}
