//! Trajectory accuracy, reconstruction error, and the timing, memory and
//! power probes used while a run is in progress.

mod associate;
mod ate;
mod icp;
mod kdtree;
mod probes;
mod rer;
mod rpe;
pub mod stats;

use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryError, Pose, Timestamp};

pub use associate::{associate, Associator, DEFAULT_MAX_DT};
pub use ate::{ate_aligned, ate_runtime, runtime_alignment, runtime_error, AlignMode, AlignedAte, AteStats};
pub use icp::{icp, icp_from, icp_point_to_plane, IcpParams, IcpResult};
pub use kdtree::KdTree;
pub use probes::{MemoryProbe, MemoryProbeKind, PowerProbe, PowerTrace};
pub use rer::{rer, RerResult};
pub use rpe::{rpe, RpeDelta, RpeStats};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub timestamp: Timestamp,
    pub pose: Pose,
}

impl TrajectorySample {
    pub fn new(timestamp: Timestamp, pose: Pose) -> Self {
        Self { timestamp, pose }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociatedPair {
    pub gt: TrajectorySample,
    pub est: TrajectorySample,
    /// |t_gt - t_est| in seconds.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("no associated pairs")]
    EmptyPairs,
    #[error("need at least {needed} pairs, got {got}")]
    InsufficientPairs { needed: usize, got: usize },
    #[error("fewer than 3 correspondences within {max_distance} m")]
    NoCorrespondences { max_distance: f64 },
    #[error("empty point cloud")]
    EmptyCloud,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("probe unavailable: {0}")]
    ProbeUnavailable(String),
}

