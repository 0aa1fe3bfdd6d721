use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Timestamp};

/// Name of the channel every algorithm must register.
pub const POSE_CHANNEL: &str = "pose";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
#[repr(u32)]
pub enum OutputKind {
    Pose = 0,
    PointCloud = 1,
    FeatureList = 2,
    RgbFrame = 3,
    TrackingStatus = 4,
    /// Seconds spent in a named phase of the last process step.
    TimingPhase = 5,
    /// Bytes the algorithm reports holding.
    MemoryCounter = 6,
}

impl OutputKind {
    pub fn from_u32(v: u32) -> Option<Self> {
        Some(match v {
            0 => Self::Pose,
            1 => Self::PointCloud,
            2 => Self::FeatureList,
            3 => Self::RgbFrame,
            4 => Self::TrackingStatus,
            5 => Self::TimingPhase,
            6 => Self::MemoryCounter,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
#[repr(u32)]
pub enum TrackingStatus {
    #[default]
    Bootstrap = 0,
    Tracking = 1,
    Lost = 2,
}

impl TrackingStatus {
    pub fn from_u32(v: u32) -> Option<Self> {
        Some(match v {
            0 => Self::Bootstrap,
            1 => Self::Tracking,
            2 => Self::Lost,
            _ => return None,
        })
    }
}

impl fmt::Display for TrackingStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrackingStatus::Bootstrap => "BOOTSTRAP",
            TrackingStatus::Tracking => "TRACKING",
            TrackingStatus::Lost => "LOST",
        })
    }
}

/// A value published by an algorithm, borrowed from the plugin for the
/// duration of the publish call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OutputValue<'a> {
    Pose(Pose),
    Points(&'a [[f32; 3]]),
    Features(&'a [[f32; 2]]),
    Image { width: u32, height: u32, rgb: &'a [u8] },
    Status(TrackingStatus),
    Scalar(f64),
}

impl OutputValue<'_> {
    pub fn kind_matches(&self, kind: OutputKind) -> bool {
        matches!(
            (self, kind),
            (OutputValue::Pose(_), OutputKind::Pose)
                | (OutputValue::Points(_), OutputKind::PointCloud)
                | (OutputValue::Features(_), OutputKind::FeatureList)
                | (OutputValue::Image { .. }, OutputKind::RgbFrame)
                | (OutputValue::Status(_), OutputKind::TrackingStatus)
                | (OutputValue::Scalar(_), OutputKind::TimingPhase | OutputKind::MemoryCounter)
        )
    }

    pub fn to_owned(self) -> OutputData {
        match self {
            OutputValue::Pose(p) => OutputData::Pose(p),
            OutputValue::Points(p) => OutputData::Points(p.to_vec()),
            OutputValue::Features(f) => OutputData::Features(f.to_vec()),
            OutputValue::Image { width, height, rgb } => OutputData::Image {
                width,
                height,
                rgb: rgb.to_vec(),
            },
            OutputValue::Status(s) => OutputData::Status(s),
            OutputValue::Scalar(v) => OutputData::Scalar(v),
        }
    }
}

/// Owned copy of a published value, as kept by the harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OutputData {
    Pose(Pose),
    Points(Vec<[f32; 3]>),
    Features(Vec<[f32; 2]>),
    Image { width: u32, height: u32, rgb: Vec<u8> },
    Status(TrackingStatus),
    Scalar(f64),
}

impl OutputData {
    pub fn as_value(&self) -> OutputValue<'_> {
        match self {
            OutputData::Pose(p) => OutputValue::Pose(*p),
            OutputData::Points(p) => OutputValue::Points(p),
            OutputData::Features(f) => OutputValue::Features(f),
            OutputData::Image { width, height, rgb } => OutputValue::Image {
                width: *width,
                height: *height,
                rgb,
            },
            OutputData::Status(s) => OutputValue::Status(*s),
            OutputData::Scalar(v) => OutputValue::Scalar(*v),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputChannel {
    pub name: String,
    pub kind: OutputKind,
    pub latest: Option<(Timestamp, OutputData)>,
    /// Incremented on every publish.
    pub version: u64,
}

impl OutputChannel {
    pub fn new(name: &str, kind: OutputKind) -> Self {
        Self {
            name: name.to_string(),
            kind,
            latest: None,
            version: 0,
        }
    }
}
