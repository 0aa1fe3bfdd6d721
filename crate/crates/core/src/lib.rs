//! Core library of the SLAM benchmarking harness: the `.slam` datafile
//! codec, dataset converters, the algorithm plugin contract and loader, and
//! the trajectory / reconstruction / performance metrics.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod api;
pub mod camera;
pub mod datafile;
pub mod geometry;
pub mod ingest;
pub mod metrics;

pub use geometry::{Pose, SimTransform, Timestamp, Vec3};
