//! The benchmark loop: streams a datafile through one or more algorithms in
//! lockstep and collects per-frame metrics.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use slambench_core::api::{
    library_name, load_algorithm, AlgorithmHandle, ApiError, FrameView, LifecycleState, OutputData, OutputKind, ParamValue,
    Parameter, TrackingStatus, ValueType, POSE_CHANNEL,
};
use slambench_core::datafile::payload::{decode_point_cloud, decode_pose};
use slambench_core::datafile::{Datafile, FrameCursor, FrameRecord, SensorDescriptor, SensorType};
use slambench_core::metrics::{
    ate_aligned, rer, rpe, runtime_alignment, runtime_error, AlignMode, AssociatedPair, Associator, IcpParams, MemoryProbe,
    MemoryProbeKind, PowerProbe, PowerTrace, RpeDelta, TrajectorySample, DEFAULT_MAX_DT,
};
use slambench_core::{Pose, Timestamp, Vec3};

use crate::report::{MetricRow, RowSummary, RunMetadata, RunReport, RunSummary};
use crate::RunnerError;

/// Name of the point-cloud channel accumulated into the reconstruction.
pub const MAP_CHANNEL: &str = "map";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub library: PathBuf,
    /// Replaces the name derived from the library file.
    #[serde(default)]
    pub name: Option<String>,
    /// Keyed by long or short parameter name. String values are parsed as
    /// the declared type.
    #[serde(default)]
    pub parameters: BTreeMap<String, ParamValue>,
}

impl AlgorithmSpec {
    pub fn new(library: impl Into<PathBuf>) -> Self {
        Self {
            library: library.into(),
            name: None,
            parameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: impl Into<ParamValue>) -> Self {
        self.parameters.insert(name.to_string(), value.into());
        self
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| library_name(&self.library))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSpec {
    pub datafile: PathBuf,
    pub algorithms: Vec<AlgorithmSpec>,
    pub frame_limit: Option<usize>,
    pub max_dt: f64,
    pub memory_probe: MemoryProbeKind,
    pub power_trace: Option<PathBuf>,
    /// Test mode: ground-truth frames are delivered to the algorithms too.
    pub forward_ground_truth: bool,
    pub ui_enabled: bool,
    /// Compute RER at the end of each run when the datafile has a
    /// ground-truth cloud.
    pub reconstruction_error: bool,
    /// Estimated map points fed to RER, decimated uniformly beyond this.
    pub rer_max_points: usize,
    /// Point budget for map snapshots served to clients.
    pub point_budget: usize,
    pub seed: u64,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            datafile: PathBuf::new(),
            algorithms: Vec::new(),
            frame_limit: None,
            max_dt: DEFAULT_MAX_DT,
            memory_probe: MemoryProbeKind::Alloc,
            power_trace: None,
            forward_ground_truth: false,
            ui_enabled: false,
            reconstruction_error: true,
            rer_max_points: 50_000,
            point_budget: 20_000,
            seed: 0,
        }
    }
}

impl RunSpec {
    pub fn new(datafile: impl Into<PathBuf>, algorithms: Vec<AlgorithmSpec>) -> Self {
        Self {
            datafile: datafile.into(),
            algorithms,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        if self.algorithms.is_empty() {
            return Err(RunnerError::InvalidSpec("no algorithm to run".into()));
        }
        if !self.datafile.is_file() {
            return Err(RunnerError::InvalidSpec(format!("datafile {} does not exist", self.datafile.display())));
        }
        if !(self.max_dt >= 0.0) {
            return Err(RunnerError::InvalidSpec(format!("max_dt must be non-negative, got {}", self.max_dt)));
        }
        let mut seen = BTreeMap::new();
        for a in &self.algorithms {
            let name = a.display_name();
            if let Some(other) = seen.insert(name.clone(), a.library.clone()) {
                return Err(RunnerError::InvalidSpec(format!(
                    "algorithm name `{name}` used by both {} and {}; give one a distinct name",
                    other.display(),
                    a.library.display()
                )));
            }
        }
        Ok(())
    }
}

/// Sets a parameter from a spec value, parsing strings as the declared type.
pub fn apply_parameter(handle: &mut AlgorithmHandle, name: &str, value: &ParamValue) -> Result<ParamValue, ApiError> {
    if let ParamValue::Str(text) = value {
        let declared = handle.parameters().iter().find(|p| p.spec.matches(name)).map(|p| p.spec.value_type);
        if declared.is_some_and(|t| t != ValueType::String) {
            return handle.set_parameter_str(name, text);
        }
    }
    handle.set_parameter(name, value.clone())
}

/// Uniform random subset of at most `budget` points, in original order.
pub fn decimate<T: Copy>(points: &[T], budget: usize, seed: u64) -> Vec<T> {
    if points.len() <= budget {
        return points.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = rand::seq::index::sample(&mut rng, points.len(), budget).into_vec();
    keep.sort_unstable();
    keep.into_iter().map(|i| points[i]).collect()
}

#[derive(Default)]
struct Scratch {
    duration: Option<f64>,
    phases: BTreeMap<String, f64>,
    ate_errors: Vec<f64>,
    new_poses: Vec<TrajectorySample>,
}

/// One algorithm's state within a benchmark.
pub struct AlgorithmRun {
    name: String,
    library: Option<PathBuf>,
    handle: Option<AlgorithmHandle>,
    failure: Option<String>,
    parameters: BTreeMap<String, ParamValue>,
    probe: MemoryProbe,
    memory_after_init: Option<i64>,
    associator: Associator,
    alignment: Option<Pose>,
    last_pose: Option<Timestamp>,
    estimates: Vec<TrajectorySample>,
    pairs: Vec<AssociatedPair>,
    running_ate: Option<f64>,
    map: Vec<[f32; 3]>,
    versions: HashMap<String, u64>,
    status: Option<TrackingStatus>,
    rows: Vec<MetricRow>,
    scratch: Scratch,
}

impl AlgorithmRun {
    fn new(name: String, library: Option<PathBuf>, probe: MemoryProbe, ground_truth: Vec<TrajectorySample>, max_dt: f64) -> Self {
        Self {
            name,
            library,
            handle: None,
            failure: None,
            parameters: BTreeMap::new(),
            probe,
            memory_after_init: None,
            associator: Associator::new(ground_truth, max_dt),
            alignment: None,
            last_pose: None,
            estimates: Vec::new(),
            pairs: Vec::new(),
            running_ate: None,
            map: Vec::new(),
            versions: HashMap::new(),
            status: None,
            rows: Vec::new(),
            scratch: Scratch::default(),
        }
    }

    /// Configures and initialises `handle`; on error the run is marked
    /// failed and the handle released.
    fn start(&mut self, mut handle: AlgorithmHandle, spec: &AlgorithmSpec, sensors: &[SensorDescriptor], ui: bool) {
        handle.set_name(&self.name);
        let result = (|| {
            handle.set_ui_enabled(ui)?;
            handle.new_configuration()?;
            for (name, value) in &spec.parameters {
                apply_parameter(&mut handle, name, value)?;
            }
            handle.set_sensors(sensors.to_vec())?;
            self.parameters = current_parameters(handle.parameters());
            handle.init()
        })();
        match result {
            Ok(()) => {
                self.memory_after_init = self.probe.sample().ok();
                self.handle = Some(handle);
            }
            Err(e) => {
                if matches!(handle.state(), LifecycleState::Configured | LifecycleState::Initialised) {
                    let _ = handle.clean();
                }
                self.fail(e.to_string());
            }
        }
    }

    fn fail(&mut self, cause: String) {
        log::error!("{}: run aborted: {cause}", self.name);
        self.failure = Some(cause);
        if let Some(mut h) = self.handle.take() {
            if matches!(h.state(), LifecycleState::Configured | LifecycleState::Initialised) {
                let _ = h.clean();
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref()
    }

    pub fn estimates(&self) -> &[TrajectorySample] {
        &self.estimates
    }

    pub fn rows(&self) -> &[MetricRow] {
        &self.rows
    }

    pub fn map(&self) -> &[[f32; 3]] {
        &self.map
    }

    pub fn status(&self) -> Option<TrackingStatus> {
        self.status
    }

    /// Declared parameters with their current values; empty once the
    /// algorithm has been released.
    pub fn parameters(&self) -> Vec<Parameter> {
        self.handle.as_ref().map(|h| h.parameters().to_vec()).unwrap_or_default()
    }

    pub fn handle(&self) -> Option<&AlgorithmHandle> {
        self.handle.as_ref()
    }

    fn deliver(&mut self, frame: &FrameRecord) {
        let Some(handle) = self.handle.as_mut() else {
            return;
        };
        let view = FrameView {
            timestamp: frame.timestamp,
            sensor_index: frame.sensor_index,
            payload: &frame.payload,
        };
        match handle.update_frame(&view) {
            Ok(true) => {}
            Ok(false) => return,
            Err(e) => return self.fail(e.to_string()),
        }
        let start = Instant::now();
        let processed = handle.process_once();
        let elapsed = start.elapsed().as_secs_f64();
        *self.scratch.duration.get_or_insert(0.0) += elapsed;
        if let Err(e) = processed {
            return self.fail(e.to_string());
        }
        if let Err(e) = handle.update_outputs() {
            return self.fail(e.to_string());
        }
        self.read_outputs();
    }

    fn read_outputs(&mut self) {
        let Some(handle) = self.handle.as_ref() else {
            return;
        };
        for channel in handle.channels() {
            let seen = self.versions.entry(channel.name.clone()).or_insert(0);
            if *seen == channel.version {
                continue;
            }
            *seen = channel.version;
            let Some((t, data)) = &channel.latest else {
                continue;
            };
            match (channel.kind, data) {
                (OutputKind::Pose, OutputData::Pose(pose)) if channel.name == POSE_CHANNEL => {
                    if self.last_pose.is_some_and(|last| *t <= last) {
                        continue;
                    }
                    self.last_pose = Some(*t);
                    let sample = TrajectorySample::new(*t, *pose);
                    self.estimates.push(sample);
                    self.scratch.new_poses.push(sample);
                    if let Some(pair) = self.associator.push(sample) {
                        let s = *self.alignment.get_or_insert_with(|| runtime_alignment(&pair));
                        let error = runtime_error(&s, &pair);
                        self.pairs.push(pair);
                        self.scratch.ate_errors.push(error);
                        self.running_ate = Some(error);
                    }
                }
                (OutputKind::TimingPhase, OutputData::Scalar(secs)) => {
                    *self.scratch.phases.entry(channel.name.clone()).or_insert(0.0) += secs;
                }
                (OutputKind::TrackingStatus, OutputData::Status(s)) => self.status = Some(*s),
                (OutputKind::PointCloud, OutputData::Points(points)) if channel.name == MAP_CHANNEL => {
                    self.map.extend_from_slice(points);
                }
                _ => {}
            }
        }
    }

    fn plugin_memory(&self) -> Option<f64> {
        let handle = self.handle.as_ref()?;
        let values: Vec<f64> = handle
            .channels()
            .iter()
            .filter(|c| c.kind == OutputKind::MemoryCounter)
            .filter_map(|c| match &c.latest {
                Some((_, OutputData::Scalar(v))) => Some(*v),
                _ => None,
            })
            .collect();
        (!values.is_empty()).then(|| values.iter().sum())
    }

    fn close_row(&mut self, frame: usize, timestamp: Timestamp, power: Option<f64>) -> AlgorithmStep {
        let scratch = std::mem::take(&mut self.scratch);
        let status_before = self.rows.last().and_then(|r| r.status);
        if self.handle.is_none() {
            return AlgorithmStep {
                row: None,
                new_poses: scratch.new_poses,
                status_changed: None,
                failure: self.failure.clone(),
            };
        }
        let mut row = MetricRow::new(frame, timestamp);
        row.duration = scratch.duration;
        row.phases = scratch.phases;
        row.memory = self.probe.sample().ok();
        row.plugin_memory = self.plugin_memory();
        row.power = power;
        row.ate = self.running_ate;
        row.ate_errors = scratch.ate_errors;
        row.status = self.status;
        self.rows.push(row.clone());
        AlgorithmStep {
            status_changed: (row.status != status_before).then_some(row.status).flatten(),
            row: Some(row),
            new_poses: scratch.new_poses,
            failure: None,
        }
    }

    fn report(mut self, meta: &ReportContext<'_>) -> RunReport {
        if let Some(mut h) = self.handle.take() {
            if matches!(h.state(), LifecycleState::Configured | LifecycleState::Initialised) {
                let _ = h.clean();
            }
        }
        let mut summary = RunSummary {
            rows: RowSummary::from_rows(&self.rows),
            ..RunSummary::default()
        };
        let aligned = ate_aligned(&self.pairs, AlignMode::Rigid).ok();
        summary.ate_aligned_rmse = aligned.as_ref().map(|a| a.stats.rmse);
        if let Ok(r) = rpe(&self.pairs, RpeDelta::Pairs(1)) {
            summary.rpe_translation_rmse = Some(r.trans_rmse);
            summary.rpe_rotation_rmse = Some(r.rot_rmse);
        }
        if let (Some(gt), true) = (meta.gt_cloud, meta.spec.reconstruction_error) {
            if !self.map.is_empty() {
                // the map lives in the estimate's frame: bring it next to the
                // ground truth before ICP refines the fit
                let points = decimate(&self.map, meta.spec.rer_max_points, meta.spec.seed);
                let to_world = |p: &[f32; 3]| {
                    let p = Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64);
                    match (&aligned, &self.alignment) {
                        (Some(a), _) => a.transform.apply(&p),
                        (None, Some(s)) => s.transform_point(&p),
                        (None, None) => p,
                    }
                };
                let est: Vec<Vec3> = points.iter().map(to_world).collect();
                match rer(&est, gt, &IcpParams::default()) {
                    Ok(r) => summary.rer = Some(r.mean),
                    Err(e) => log::warn!("{}: RER unavailable: {e}", self.name),
                }
            }
        }
        RunReport {
            metadata: RunMetadata {
                datafile: meta.spec.datafile.clone(),
                algorithm: self.name,
                library: self.library,
                parameters: self.parameters,
                seed: meta.spec.seed,
                max_dt: meta.spec.max_dt,
                memory_probe: self.probe.kind(),
                memory_probe_fallback: self.probe.fallback_reason().map(str::to_string),
                power_trace: meta.spec.power_trace.clone(),
                forward_ground_truth: meta.spec.forward_ground_truth,
                memory_after_init: self.memory_after_init,
                failure: self.failure,
            },
            summary,
            rows: self.rows,
            trajectory: self.estimates,
        }
    }
}

fn current_parameters(params: &[Parameter]) -> BTreeMap<String, ParamValue> {
    params.iter().map(|p| (p.spec.long_name.clone(), p.current.clone())).collect()
}

struct ReportContext<'a> {
    spec: &'a RunSpec,
    gt_cloud: Option<&'a [Vec3]>,
}

/// What happened to one algorithm during one input frame.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmStep {
    /// Absent once the algorithm has failed.
    pub row: Option<MetricRow>,
    pub new_poses: Vec<TrajectorySample>,
    pub status_changed: Option<TrackingStatus>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameStep {
    pub frame: usize,
    pub timestamp: Timestamp,
    /// In the order of the run specification.
    pub algorithms: Vec<AlgorithmStep>,
}

/// A benchmark in progress. Each [`step`](Self::step) feeds one input frame
/// (preceded by any due ground-truth frames in test mode) to every
/// algorithm that is still running.
pub struct Benchmark {
    spec: RunSpec,
    sensors: Vec<SensorDescriptor>,
    ground_truth: Vec<TrajectorySample>,
    gt_cloud: Option<Vec<Vec3>>,
    forwarded: VecDeque<FrameRecord>,
    input: FrameCursor,
    total_frames: usize,
    frame: usize,
    exhausted: bool,
    started: Instant,
    power: PowerProbe,
    runs: Vec<AlgorithmRun>,
}

impl Benchmark {
    /// Opens the datafile and loads every algorithm. Algorithms that fail to
    /// load or initialise are recorded as failed runs; the others proceed.
    pub fn new(spec: RunSpec) -> Result<Self, RunnerError> {
        spec.validate()?;
        let handles = spec
            .algorithms
            .iter()
            .map(|a| {
                let probe = MemoryProbe::new(spec.memory_probe);
                (probe, load_algorithm(&a.library))
            })
            .collect();
        Self::with_handles(spec, handles)
    }

    /// As [`new`](Self::new) with already constructed handles, one per
    /// algorithm entry of `spec` (whose `library` is then only a label).
    pub fn from_handles(spec: RunSpec, handles: Vec<AlgorithmHandle>) -> Result<Self, RunnerError> {
        if handles.len() != spec.algorithms.len() {
            return Err(RunnerError::InvalidSpec(format!(
                "{} handles for {} algorithms",
                handles.len(),
                spec.algorithms.len()
            )));
        }
        let probe = MemoryProbe::new(spec.memory_probe);
        let handles = handles.into_iter().map(|h| (probe.clone(), Ok(h))).collect();
        Self::with_handles(spec, handles)
    }

    fn with_handles(spec: RunSpec, handles: Vec<(MemoryProbe, Result<AlgorithmHandle, ApiError>)>) -> Result<Self, RunnerError> {
        spec.validate()?;
        let open_err = |source| RunnerError::Datafile {
            path: spec.datafile.clone(),
            source,
        };
        let file = Datafile::open(&spec.datafile).map_err(open_err)?;
        let sensors = file.sensors().to_vec();
        let (ground_truth, gt_cloud, gt_frames) = read_ground_truth(&file, &sensors).map_err(open_err)?;
        let total_frames = file.summary().map_err(open_err)?.input_frame_count as usize;
        let input = file.input_frames().map_err(open_err)?;
        let power = match &spec.power_trace {
            Some(path) => PowerProbe::Trace(PowerTrace::load(path)?),
            None => PowerProbe::None,
        };

        let mut runs = Vec::new();
        for (a, (probe, handle)) in spec.algorithms.iter().zip(handles) {
            let mut run = AlgorithmRun::new(a.display_name(), Some(a.library.clone()), probe, ground_truth.clone(), spec.max_dt);
            match handle {
                Ok(h) => run.start(h, a, &sensors, spec.ui_enabled),
                Err(e) => run.fail(e.to_string()),
            }
            runs.push(run);
        }
        let forwarded = if spec.forward_ground_truth { gt_frames.into() } else { VecDeque::new() };
        Ok(Self {
            total_frames: spec.frame_limit.map_or(total_frames, |n| n.min(total_frames)),
            spec,
            sensors,
            ground_truth,
            gt_cloud,
            forwarded,
            input,
            frame: 0,
            exhausted: false,
            started: Instant::now(),
            power,
            runs,
        })
    }

    pub fn spec(&self) -> &RunSpec {
        &self.spec
    }

    pub fn sensors(&self) -> &[SensorDescriptor] {
        &self.sensors
    }

    pub fn ground_truth(&self) -> &[TrajectorySample] {
        &self.ground_truth
    }

    pub fn runs(&self) -> &[AlgorithmRun] {
        &self.runs
    }

    pub fn algorithm_names(&self) -> Vec<String> {
        self.runs.iter().map(|r| r.name.clone()).collect()
    }

    /// Input frames consumed so far.
    pub fn frame(&self) -> usize {
        self.frame
    }

    /// Input frames this benchmark will consume, after the frame limit.
    pub fn total_frames(&self) -> usize {
        self.total_frames
    }

    pub fn is_done(&self) -> bool {
        self.exhausted || self.frame >= self.total_frames || self.runs.iter().all(|r| r.handle.is_none())
    }

    /// Changes a parameter of a running algorithm between frames. Only
    /// parameters declared live are accepted.
    pub fn set_parameter(&mut self, algorithm: usize, name: &str, value: &ParamValue) -> Result<(ParamValue, ParamValue), RunnerError> {
        let run = self
            .runs
            .get_mut(algorithm)
            .ok_or_else(|| RunnerError::InvalidSpec(format!("no algorithm #{algorithm}")))?;
        let algorithm_name = run.name.clone();
        let err = |source| RunnerError::Algorithm {
            algorithm: algorithm_name.clone(),
            source,
        };
        let handle = run.handle.as_mut().ok_or_else(|| {
            err(ApiError::Lifecycle {
                call: "set_parameter",
                detail: "the algorithm is no longer running".into(),
            })
        })?;
        let old = apply_parameter(handle, name, value).map_err(err)?;
        let new = handle.parameter(name).expect("parameter was just set");
        Ok((old, new))
    }

    /// Processes the next input frame. Returns `None` once the stream or
    /// the frame limit is exhausted.
    pub fn step(&mut self) -> Result<Option<FrameStep>, RunnerError> {
        if self.is_done() {
            return Ok(None);
        }
        let record = self.input.next_record().map_err(|source| RunnerError::Datafile {
            path: self.spec.datafile.clone(),
            source,
        })?;
        let Some(record) = record else {
            self.exhausted = true;
            return Ok(None);
        };
        // ground truth goes first at equal timestamps
        while self.forwarded.front().is_some_and(|g| g.timestamp <= record.timestamp) {
            let gt = self.forwarded.pop_front().unwrap();
            for run in &mut self.runs {
                run.deliver(&gt);
            }
        }
        for run in &mut self.runs {
            run.deliver(&record);
        }
        let power = self.power.sample(self.started.elapsed().as_secs_f64());
        let frame = self.frame;
        let algorithms = self.runs.iter_mut().map(|r| r.close_row(frame, record.timestamp, power)).collect();
        self.frame += 1;
        Ok(Some(FrameStep {
            frame,
            timestamp: record.timestamp,
            algorithms,
        }))
    }

    /// Releases every algorithm and computes the run summaries.
    pub fn finish(self) -> Vec<RunReport> {
        let ctx = ReportContext {
            spec: &self.spec,
            gt_cloud: self.gt_cloud.as_deref(),
        };
        self.runs.into_iter().map(|r| r.report(&ctx)).collect()
    }
}

type GroundTruth = (Vec<TrajectorySample>, Option<Vec<Vec3>>, Vec<FrameRecord>);

fn read_ground_truth(file: &Datafile, sensors: &[SensorDescriptor]) -> Result<GroundTruth, slambench_core::datafile::DatafileError> {
    let mut trajectory = Vec::new();
    let mut cloud = None;
    let mut frames = Vec::new();
    let mut cursor = file.gt_frames()?;
    while let Some(f) = cursor.next_record()? {
        match sensors.get(f.sensor_index as usize).map(|s| s.sensor_type()) {
            Some(SensorType::GtPose) => match decode_pose(&f.payload) {
                Ok(p) => trajectory.push(TrajectorySample::new(f.timestamp, p)),
                Err(e) => log::warn!("skipping ground-truth pose at {}: {e}", f.timestamp),
            },
            Some(SensorType::GtPointCloud) if cloud.is_none() => match decode_point_cloud(&f.payload) {
                Ok(points) => cloud = Some(points.iter().map(|p| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)).collect()),
                Err(e) => log::warn!("skipping ground-truth cloud: {e}"),
            },
            _ => {}
        }
        frames.push(f);
    }
    Ok((trajectory, cloud, frames))
}

/// Runs a benchmark to completion, handing each frame to `on_step`.
pub fn run_benchmark_with(spec: RunSpec, mut on_step: impl FnMut(&Benchmark, &FrameStep)) -> Result<Vec<RunReport>, RunnerError> {
    let mut bench = Benchmark::new(spec)?;
    while let Some(step) = bench.step()? {
        on_step(&bench, &step);
    }
    Ok(bench.finish())
}

pub fn run_benchmark(spec: RunSpec) -> Result<Vec<RunReport>, RunnerError> {
    run_benchmark_with(spec, |_, _| {})
}

/// Datafile the way it is listed to clients.
pub fn describe_datafile(path: &Path) -> Result<slambench_core::datafile::DatafileSummary, RunnerError> {
    let err = |source| RunnerError::Datafile {
        path: path.to_path_buf(),
        source,
    };
    Datafile::open(path).map_err(err)?.summary().map_err(err)
}
