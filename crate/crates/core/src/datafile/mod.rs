//! The `.slam` datafile: a little-endian binary container holding a sensor
//! table, a (possibly empty) ground-truth frame section and an input frame
//! section, each ordered by timestamp.
//!
//! ```text
//! header   u32 version (= 2), u32 sensor_count
//! sensors  sensor_count descriptors, each starting with a u32 type tag
//! frames   u32 seconds, u32 nanoseconds, u32 sensor_index, payload
//! ```
//!
//! The ground-truth section ends at the first frame whose sensor is not a
//! ground-truth sensor. Payload sizes follow from the referenced sensor.

mod format;
pub mod payload;
pub mod testing;
mod reader;
mod writer;

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};

use crate::geometry::Timestamp;

pub use format::{
    CameraParams, ImuParams, PayloadLen, PixelFormat, SensorDescriptor, SensorType, DATAFILE_VERSION,
    FRAME_HEADER_LEN, GT_POSE_PAYLOAD_LEN, IMU_PAYLOAD_LEN,
};
pub use reader::{read_datafile, Datafile, DatafileContents, DatafileHeader, DatafileSummary, FrameCursor, FrameRef};
pub use writer::{write_datafile, DatafileWriter};

pub const FILE_EXTENSION: &str = "slam";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Section {
    GroundTruth,
    Input,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Section::GroundTruth => "ground-truth",
            Section::Input => "input",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameRecord {
    pub timestamp: Timestamp,
    pub sensor_index: u32,
    pub payload: Vec<u8>,
}

impl FrameRecord {
    pub fn new(timestamp: Timestamp, sensor_index: u32, payload: Vec<u8>) -> Self {
        Self { timestamp, sensor_index, payload }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatafileError {
    #[error("unsupported datafile version {found} at byte {offset} (expected {DATAFILE_VERSION})")]
    BadMagicOrVersion { found: u32, offset: u64 },
    #[error("file truncated at byte {offset} while reading {context}")]
    TruncatedFile { offset: u64, context: &'static str },
    #[error("invalid datafile at byte {offset}: {reason}")]
    InvariantViolation { offset: u64, reason: String },
    #[error("unsupported sensor type {sensor_type} at byte {offset}")]
    UnsupportedSensor { sensor_type: u32, offset: u64 },
    #[error("{section} frame {index} is earlier than its predecessor")]
    UnsortedFrames { section: Section, index: usize },
    #[error("{section} frame {index}: payload has {found} bytes, sensor requires {expected}")]
    PayloadSizeMismatch {
        section: Section,
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("{section} frame {index}: sensor index {sensor_index} does not exist")]
    BadSensorIndex { section: Section, index: usize, sensor_index: u32 },
    #[error("frame {index}: sensor {sensor_index} cannot appear in the {section} section")]
    WrongSection { index: usize, sensor_index: u32, section: Section },
    #[error("sensor {index}: {reason}")]
    InvalidSensor { index: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl DatafileError {
    /// Byte offset of the violation, for errors raised while parsing.
    pub fn offset(&self) -> Option<u64> {
        match self {
            Self::BadMagicOrVersion { offset, .. }
            | Self::TruncatedFile { offset, .. }
            | Self::InvariantViolation { offset, .. }
            | Self::UnsupportedSensor { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}
