use std::ffi::c_void;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use libloading::Library;

use super::config::{AlgorithmConfig, ConfigApi, ConfigPhase};
use super::ffi::{CleanFn, ConfigFn, SbConfig, SbFrame, UpdateFrameFn, HOST_VTABLE};
use super::outputs::{OutputChannel, POSE_CHANNEL};
use super::params::{ParamValue, Parameter};
use super::{ApiError, API_VERSION};
use crate::datafile::SensorDescriptor;
use crate::geometry::Timestamp;

/// Exported symbol names, version constant first.
pub const SYMBOLS: [&str; 7] = [
    "sb_api_version",
    "sb_new_slam_configuration",
    "sb_init_slam_system",
    "sb_update_frame",
    "sb_process_once",
    "sb_update_outputs",
    "sb_clean_slam_system",
];

/// One frame as delivered to an algorithm. The payload is only valid for
/// the duration of the call; copy whatever must be kept.
#[derive(Clone, Copy, Debug)]
pub struct FrameView<'a> {
    pub timestamp: Timestamp,
    pub sensor_index: u32,
    pub payload: &'a [u8],
}

/// A SLAM algorithm as seen by the harness. Every call returns a success
/// flag; `update_frame` returns whether a processing step is warranted.
pub trait SlamAlgorithm: Send {
    fn new_configuration(&mut self, cfg: &mut dyn ConfigApi) -> bool;
    fn init(&mut self, cfg: &mut dyn ConfigApi) -> bool;
    /// Frames from sensors the algorithm does not use must be ignored.
    fn update_frame(&mut self, cfg: &mut dyn ConfigApi, frame: &FrameView<'_>) -> bool;
    fn process_once(&mut self, cfg: &mut dyn ConfigApi) -> bool;
    fn update_outputs(&mut self, cfg: &mut dyn ConfigApi) -> bool;
    fn clean(&mut self) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LifecycleState {
    Created,
    Configured,
    Initialised,
    Finished,
}

struct EntryPoints {
    new_configuration: ConfigFn,
    init: ConfigFn,
    update_frame: UpdateFrameFn,
    process_once: ConfigFn,
    update_outputs: ConfigFn,
    clean: CleanFn,
}

struct DynamicPlugin {
    entry: EntryPoints,
    // dropped before the directory holding the copied library
    _library: Library,
    _copy: tempfile::TempDir,
}

enum Backend {
    InProcess(Box<dyn SlamAlgorithm>),
    Dynamic(DynamicPlugin),
}

/// Drives one algorithm instance through its lifecycle. Out-of-order calls
/// are rejected here and never reach the algorithm.
pub struct AlgorithmHandle {
    name: String,
    source: Option<PathBuf>,
    backend: Backend,
    state: LifecycleState,
    // boxed so the address handed across the C boundary stays put
    config: Box<AlgorithmConfig>,
    pending_ready: bool,
    violations: Vec<ApiError>,
}

impl fmt::Debug for AlgorithmHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlgorithmHandle")
            .field("name", &self.name)
            .field("source", &self.source)
            .field("state", &self.state)
            .finish_non_exhaustive()
    }
}

/// Loads a plugin library and resolves its symbol table.
///
/// The library is copied to a private temporary file first, so loading the
/// same path twice yields two handles with independent global state.
pub fn load_algorithm(path: impl AsRef<Path>) -> Result<AlgorithmHandle, ApiError> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(ApiError::LoadFailure(format!("{} does not exist", path.display())));
    }
    let file_name = path.file_name().ok_or_else(|| ApiError::LoadFailure(format!("{} has no file name", path.display())))?;
    let copy = tempfile::Builder::new()
        .prefix("sb-plugin-")
        .tempdir()
        .map_err(|e| ApiError::LoadFailure(format!("temporary directory: {e}")))?;
    let private = copy.path().join(file_name);
    std::fs::copy(path, &private).map_err(|e| ApiError::LoadFailure(format!("{}: {e}", path.display())))?;

    // SAFETY: loading runs the library's initialisers; plugins are trusted code
    let library = unsafe { Library::new(&private) }.map_err(|e| ApiError::LoadFailure(format!("{}: {e}", path.display())))?;

    let version = unsafe {
        let sym = library
            .get::<*const u32>(b"sb_api_version\0")
            .map_err(|_| ApiError::MissingSymbol(SYMBOLS[0].into()))?;
        **sym
    };
    if version != API_VERSION {
        return Err(ApiError::ApiVersionMismatch {
            found: version,
            expected: API_VERSION,
        });
    }

    unsafe fn resolve<T: Copy>(lib: &Library, name: &str) -> Result<T, ApiError> {
        let mut bytes = name.as_bytes().to_vec();
        bytes.push(0);
        lib.get::<T>(&bytes).map(|s| *s).map_err(|_| ApiError::MissingSymbol(name.into()))
    }
    let entry = unsafe {
        EntryPoints {
            new_configuration: resolve(&library, SYMBOLS[1])?,
            init: resolve(&library, SYMBOLS[2])?,
            update_frame: resolve(&library, SYMBOLS[3])?,
            process_once: resolve(&library, SYMBOLS[4])?,
            update_outputs: resolve(&library, SYMBOLS[5])?,
            clean: resolve(&library, SYMBOLS[6])?,
        }
    };

    let mut handle = AlgorithmHandle::with_backend(
        library_name(path),
        Backend::Dynamic(DynamicPlugin {
            entry,
            _library: library,
            _copy: copy,
        }),
    );
    handle.source = Some(path.to_path_buf());
    Ok(handle)
}

/// `libicp_odometry.so` becomes `icp-odometry`.
pub fn library_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = stem.strip_prefix("lib").unwrap_or(&stem);
    stem.replace('_', "-")
}

fn call_guarded(f: impl FnOnce() -> bool) -> bool {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        log::error!("algorithm panicked");
        false
    })
}

impl AlgorithmHandle {
    /// Wraps an algorithm compiled into the harness.
    pub fn in_process(name: &str, algorithm: Box<dyn SlamAlgorithm>) -> Self {
        Self::with_backend(name.to_string(), Backend::InProcess(algorithm))
    }

    fn with_backend(name: String, backend: Backend) -> Self {
        Self {
            name,
            source: None,
            backend,
            state: LifecycleState::Created,
            config: Box::default(),
            pending_ready: false,
            violations: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: &str) {
        self.name = name.to_string();
    }

    /// Library path for dynamically loaded algorithms.
    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    pub fn state(&self) -> LifecycleState {
        self.state
    }

    pub fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    pub fn parameters(&self) -> &[Parameter] {
        self.config.parameters()
    }

    pub fn parameter(&self, name: &str) -> Option<ParamValue> {
        self.config.parameter(name)
    }

    pub fn channels(&self) -> &[OutputChannel] {
        self.config.channels()
    }

    pub fn channel(&self, name: &str) -> Option<&OutputChannel> {
        self.config.channel(name)
    }

    /// Contract violations reported by the configuration object so far,
    /// such as publishing to an unregistered channel.
    pub fn violations(&self) -> &[ApiError] {
        &self.violations
    }

    fn expect(&self, call: &'static str, allowed: &[LifecycleState]) -> Result<(), ApiError> {
        if allowed.contains(&self.state) {
            Ok(())
        } else {
            Err(ApiError::Lifecycle {
                call,
                detail: format!("not allowed in state {:?}", self.state),
            })
        }
    }

    fn collect_violations(&mut self) {
        for v in self.config.take_violations() {
            log::warn!("{}: {v}", self.name);
            self.violations.push(v);
        }
    }

    /// Runs one entry point with the configuration in `phase`.
    fn invoke(&mut self, phase: ConfigPhase, call: impl FnOnce(&mut Backend, &mut AlgorithmConfig) -> bool) -> bool {
        let previous = self.config.phase;
        self.config.phase = phase;
        let ok = call_guarded(|| call(&mut self.backend, &mut self.config));
        self.config.phase = previous;
        self.collect_violations();
        ok
    }

    fn raw_config(config: &mut AlgorithmConfig) -> SbConfig {
        SbConfig {
            ctx: (config as *mut AlgorithmConfig).cast::<c_void>(),
            vtable: &HOST_VTABLE,
        }
    }

    pub fn new_configuration(&mut self) -> Result<(), ApiError> {
        self.expect("sb_new_slam_configuration", &[LifecycleState::Created])?;
        let before = self.violations.len();
        let ok = self.invoke(ConfigPhase::Declaring, |backend, cfg| match backend {
            Backend::InProcess(a) => a.new_configuration(cfg),
            Backend::Dynamic(d) => {
                let mut raw = Self::raw_config(cfg);
                unsafe { (d.entry.new_configuration)(&mut raw) }
            }
        });
        if let Some(dup) = self.violations[before..].iter().find(|v| matches!(v, ApiError::DuplicateParameter(_))) {
            return Err(dup.clone());
        }
        if !ok {
            return Err(ApiError::CallFailed("sb_new_slam_configuration"));
        }
        self.state = LifecycleState::Configured;
        Ok(())
    }

    /// Sets a declared parameter, returning its previous value. After
    /// initialisation only parameters marked live may change.
    pub fn set_parameter(&mut self, name: &str, value: ParamValue) -> Result<ParamValue, ApiError> {
        self.expect("set_parameter", &[LifecycleState::Configured, LifecycleState::Initialised])?;
        self.config.set_parameter(name, value)
    }

    /// Parses `text` as the declared type of `name`, then sets it.
    pub fn set_parameter_str(&mut self, name: &str, text: &str) -> Result<ParamValue, ApiError> {
        let ty = self
            .config
            .parameters()
            .iter()
            .find(|p| p.spec.matches(name))
            .map(|p| p.spec.value_type)
            .ok_or_else(|| ApiError::UnknownParameter(name.to_string()))?;
        let value = ParamValue::parse_as(ty, text).map_err(|_| ApiError::ParameterType {
            name: name.to_string(),
            expected: ty,
        })?;
        self.set_parameter(name, value)
    }

    pub fn set_sensors(&mut self, sensors: Vec<SensorDescriptor>) -> Result<(), ApiError> {
        self.config.set_sensors(sensors)
    }

    pub fn set_ui_enabled(&mut self, enabled: bool) -> Result<(), ApiError> {
        self.expect("set_ui_enabled", &[LifecycleState::Created, LifecycleState::Configured])?;
        self.config.set_ui_enabled(enabled);
        Ok(())
    }

    pub fn init(&mut self) -> Result<(), ApiError> {
        self.expect("sb_init_slam_system", &[LifecycleState::Configured])?;
        self.config.freeze_sensors();
        let ok = self.invoke(ConfigPhase::Initialising, |backend, cfg| match backend {
            Backend::InProcess(a) => a.init(cfg),
            Backend::Dynamic(d) => {
                let mut raw = Self::raw_config(cfg);
                unsafe { (d.entry.init)(&mut raw) }
            }
        });
        if !ok {
            return Err(ApiError::CallFailed("sb_init_slam_system"));
        }
        self.state = LifecycleState::Initialised;
        if self.config.channel(POSE_CHANNEL).is_none() {
            return Err(ApiError::MissingPoseChannel);
        }
        self.config.phase = ConfigPhase::Running;
        Ok(())
    }

    /// Delivers one frame; returns whether a processing step is warranted.
    pub fn update_frame(&mut self, frame: &FrameView<'_>) -> Result<bool, ApiError> {
        self.expect("sb_update_frame", &[LifecycleState::Initialised])?;
        let ready = self.invoke(ConfigPhase::Running, |backend, cfg| match backend {
            Backend::InProcess(a) => a.update_frame(cfg, frame),
            Backend::Dynamic(d) => {
                let mut raw = Self::raw_config(cfg);
                let f = SbFrame {
                    seconds: frame.timestamp.seconds(),
                    nanoseconds: frame.timestamp.nanoseconds(),
                    sensor_index: frame.sensor_index,
                    data: frame.payload.as_ptr(),
                    len: frame.payload.len(),
                };
                unsafe { (d.entry.update_frame)(&mut raw, &f) }
            }
        });
        self.pending_ready |= ready;
        Ok(ready)
    }

    /// Whether a frame delivered since the last processing step asked for one.
    pub fn is_ready(&self) -> bool {
        self.pending_ready
    }

    pub fn process_once(&mut self) -> Result<(), ApiError> {
        self.expect("sb_process_once", &[LifecycleState::Initialised])?;
        if !self.pending_ready {
            return Err(ApiError::NotReady);
        }
        self.pending_ready = false;
        let ok = self.invoke(ConfigPhase::Running, |backend, cfg| match backend {
            Backend::InProcess(a) => a.process_once(cfg),
            Backend::Dynamic(d) => {
                let mut raw = Self::raw_config(cfg);
                unsafe { (d.entry.process_once)(&mut raw) }
            }
        });
        if ok {
            Ok(())
        } else {
            Err(ApiError::CallFailed("sb_process_once"))
        }
    }

    /// Refreshes output channels. `Ok(false)` means outputs are unavailable
    /// for this frame, which is tolerated.
    pub fn update_outputs(&mut self) -> Result<bool, ApiError> {
        self.expect("sb_update_outputs", &[LifecycleState::Initialised])?;
        Ok(self.invoke(ConfigPhase::Running, |backend, cfg| match backend {
            Backend::InProcess(a) => a.update_outputs(cfg),
            Backend::Dynamic(d) => {
                let mut raw = Self::raw_config(cfg);
                unsafe { (d.entry.update_outputs)(&mut raw) }
            }
        }))
    }

    /// Releases the algorithm. Also accepted after a failed initialisation
    /// so that partially allocated state can be freed.
    pub fn clean(&mut self) -> Result<bool, ApiError> {
        self.expect("sb_clean_slam_system", &[LifecycleState::Configured, LifecycleState::Initialised])?;
        let ok = self.invoke(ConfigPhase::Idle, |backend, _| match backend {
            Backend::InProcess(a) => a.clean(),
            Backend::Dynamic(d) => unsafe { (d.entry.clean)() },
        });
        self.state = LifecycleState::Finished;
        if !ok {
            log::warn!("{}: sb_clean_slam_system returned failure", self.name);
        }
        Ok(ok)
    }
}
