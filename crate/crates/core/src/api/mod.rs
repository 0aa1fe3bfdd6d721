//! The contract between the harness and SLAM algorithms.
//!
//! An algorithm implements [`SlamAlgorithm`] and is driven through an
//! [`AlgorithmHandle`], either in-process or from a shared library exporting
//! the `sb_*` symbol table (see [`export_algorithm!`](crate::export_algorithm)).

mod config;
pub mod ffi;
mod handle;
mod outputs;
mod params;

pub use config::{AlgorithmConfig, ConfigApi};
pub use handle::{library_name, load_algorithm, AlgorithmHandle, FrameView, LifecycleState, SlamAlgorithm, SYMBOLS};
pub use outputs::{OutputChannel, OutputData, OutputKind, OutputValue, TrackingStatus, POSE_CHANNEL};
pub use params::{ParamValue, Parameter, ParameterSpec, ValueType};

/// Plugin API version understood by this harness.
pub const API_VERSION: u32 = 2;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ApiError {
    #[error("parameter {name} expects a value of type {expected}")]
    ParameterType { name: String, expected: ValueType },
    #[error("parameter {name} = {value} outside [{min}, {max}]")]
    OutOfBounds { name: String, value: f64, min: f64, max: f64 },
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("parameter {0} cannot change after initialisation")]
    NotLive(String),
    #[error("the sensor table is fixed once initialisation begins")]
    SensorsFrozen,
    #[error("{call} rejected: {detail}")]
    Lifecycle { call: &'static str, detail: String },
    #[error("invalid parameter declaration: {0}")]
    InvalidParameter(String),
    #[error("parameter {0} declared twice")]
    DuplicateParameter(String),
    #[error("output channel {channel}: {reason}")]
    OutputMismatch { channel: String, reason: String },
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("missing symbol {0}")]
    MissingSymbol(String),
    #[error("plugin API version {found}, harness supports {expected}")]
    ApiVersionMismatch { found: u32, expected: u32 },
    #[error("cannot load plugin: {0}")]
    LoadFailure(String),
    #[error("{0} returned failure")]
    CallFailed(&'static str),
    #[error("sb_process_once called before sb_update_frame reported readiness")]
    NotReady,
    #[error("algorithm registered no \"pose\" output channel")]
    MissingPoseChannel,
}
