//! Rigid and similarity transforms, timestamps and closed-form point-set
//! alignment.

mod align;
mod pose;
mod timestamp;

pub use align::{alignment_rmse, umeyama_align, SimTransform};
pub use pose::{Pose, Vec3};
pub use timestamp::Timestamp;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("point sets must have equal length of at least 3 (src {src}, dst {dst})")]
    SizeMismatch { src: usize, dst: usize },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid timestamp: {0}")]
    InvalidTimestamp(String),
}
