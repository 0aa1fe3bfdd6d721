//! Per-run results and their JSON / CSV serialisation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use slambench_core::api::{ParamValue, TrackingStatus};
use slambench_core::metrics::{stats, MemoryProbeKind, TrajectorySample};
use slambench_core::Timestamp;

use crate::RunnerError;

/// Metrics for one input frame of one algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    /// Index of the input frame in the datafile.
    pub frame: usize,
    pub timestamp: Timestamp,
    /// Seconds spent in `sb_process_once` while handling this frame; absent
    /// when the frame did not trigger a processing step.
    pub duration: Option<f64>,
    #[serde(default)]
    pub phases: BTreeMap<String, f64>,
    /// Memory probe reading (bytes since the run started).
    pub memory: Option<i64>,
    /// Sum of the algorithm's self-reported memory counters (bytes).
    pub plugin_memory: Option<f64>,
    /// Watts, when a power probe is configured.
    pub power: Option<f64>,
    /// Runtime ATE of the latest matched pose so far (m).
    pub ate: Option<f64>,
    /// Runtime ATE of each pose matched while handling this frame.
    #[serde(default)]
    pub ate_errors: Vec<f64>,
    pub status: Option<TrackingStatus>,
}

impl MetricRow {
    pub fn new(frame: usize, timestamp: Timestamp) -> Self {
        Self {
            frame,
            timestamp,
            duration: None,
            phases: BTreeMap::new(),
            memory: None,
            plugin_memory: None,
            power: None,
            ate: None,
            ate_errors: Vec::new(),
            status: None,
        }
    }
}

/// Summary statistics derivable from the rows alone.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RowSummary {
    pub frames: usize,
    pub processed_frames: usize,
    pub matched_poses: usize,
    pub ate_rmse: Option<f64>,
    pub ate_mean: Option<f64>,
    pub ate_max: Option<f64>,
    pub mean_duration: Option<f64>,
    /// Processed frames over total processing time.
    pub mean_fps: Option<f64>,
    pub peak_memory: Option<i64>,
    pub peak_plugin_memory: Option<f64>,
    pub mean_power: Option<f64>,
}

impl RowSummary {
    pub fn from_rows(rows: &[MetricRow]) -> Self {
        let errors: Vec<f64> = rows.iter().flat_map(|r| r.ate_errors.iter().copied()).collect();
        let durations: Vec<f64> = rows.iter().filter_map(|r| r.duration).collect();
        let power: Vec<f64> = rows.iter().filter_map(|r| r.power).collect();
        let some = |v: &[f64], f: fn(&[f64]) -> f64| (!v.is_empty()).then(|| f(v));
        Self {
            frames: rows.len(),
            processed_frames: durations.len(),
            matched_poses: errors.len(),
            ate_rmse: some(&errors, stats::rmse),
            ate_mean: some(&errors, stats::mean),
            ate_max: some(&errors, stats::max),
            mean_duration: some(&durations, stats::mean),
            mean_fps: stats::fps(&durations),
            peak_memory: rows.iter().filter_map(|r| r.memory).max(),
            peak_plugin_memory: rows.iter().filter_map(|r| r.plugin_memory).reduce(f64::max),
            mean_power: some(&power, stats::mean),
        }
    }

    /// Field-by-field comparison; reports the first field that differs by
    /// more than `tol`.
    pub fn compare(&self, other: &RowSummary, tol: f64) -> Result<(), String> {
        let counts = [
            ("frames", self.frames, other.frames),
            ("processed_frames", self.processed_frames, other.processed_frames),
            ("matched_poses", self.matched_poses, other.matched_poses),
        ];
        for (name, a, b) in counts {
            if a != b {
                return Err(format!("{name}: {a} vs {b}"));
            }
        }
        if self.peak_memory != other.peak_memory {
            return Err(format!("peak_memory: {:?} vs {:?}", self.peak_memory, other.peak_memory));
        }
        let reals = [
            ("ate_rmse", self.ate_rmse, other.ate_rmse),
            ("ate_mean", self.ate_mean, other.ate_mean),
            ("ate_max", self.ate_max, other.ate_max),
            ("mean_duration", self.mean_duration, other.mean_duration),
            ("mean_fps", self.mean_fps, other.mean_fps),
            ("peak_plugin_memory", self.peak_plugin_memory, other.peak_plugin_memory),
            ("mean_power", self.mean_power, other.mean_power),
        ];
        for (name, a, b) in reals {
            let ok = match (a, b) {
                (None, None) => true,
                (Some(a), Some(b)) => (a - b).abs() <= tol * a.abs().max(1.0),
                _ => false,
            };
            if !ok {
                return Err(format!("{name}: {a:?} vs {b:?}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    #[serde(flatten)]
    pub rows: RowSummary,
    /// ATE RMSE after a rigid least-squares alignment of the whole trajectory.
    pub ate_aligned_rmse: Option<f64>,
    /// RPE with a one-pair step: translational (m) and rotational (rad) RMSE.
    pub rpe_translation_rmse: Option<f64>,
    pub rpe_rotation_rmse: Option<f64>,
    /// Mean reconstruction error of the accumulated `map` channel (m).
    pub rer: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub datafile: PathBuf,
    pub algorithm: String,
    pub library: Option<PathBuf>,
    /// Parameter values in effect when the run started.
    pub parameters: BTreeMap<String, ParamValue>,
    pub seed: u64,
    pub max_dt: f64,
    pub memory_probe: MemoryProbeKind,
    /// Why the requested memory probe was replaced, if it was.
    pub memory_probe_fallback: Option<String>,
    pub power_trace: Option<PathBuf>,
    pub forward_ground_truth: bool,
    /// Memory probe reading right after initialisation.
    pub memory_after_init: Option<i64>,
    /// Set when the run aborted; rows stop at the failing frame.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metadata: RunMetadata,
    pub summary: RunSummary,
    pub rows: Vec<MetricRow>,
    /// Estimated trajectory as published on the pose channel.
    pub trajectory: Vec<TrajectorySample>,
}

impl RunReport {
    /// Checks the row-derived part of the summary against a recomputation.
    pub fn verify_summary(&self, tol: f64) -> Result<(), String> {
        self.summary.rows.compare(&RowSummary::from_rows(&self.rows), tol)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown report format `{other}` (expected json or csv)")),
        }
    }
}

/// Flat row layout for CSV.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    algorithm: String,
    frame: usize,
    timestamp: String,
    duration: Option<f64>,
    memory: Option<i64>,
    plugin_memory: Option<f64>,
    power: Option<f64>,
    ate: Option<f64>,
    status: Option<TrackingStatus>,
    /// `name=seconds` pairs separated by `;`.
    phases: String,
    ate_errors: String,
}

pub fn export_reports(reports: &[RunReport], path: &Path, format: ReportFormat) -> Result<(), RunnerError> {
    let file = File::create(path).map_err(|e| RunnerError::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, reports).map_err(|e| RunnerError::Format(e.to_string()))?;
            out.write_all(b"\n").map_err(|e| RunnerError::io(path, e))?;
        }
        ReportFormat::Csv => write_csv(reports, &mut out)?,
    }
    out.flush().map_err(|e| RunnerError::io(path, e))
}

pub fn import_reports(path: &Path) -> Result<Vec<RunReport>, RunnerError> {
    let file = File::open(path).map_err(|e| RunnerError::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| RunnerError::Format(format!("{}: {e}", path.display())))
}

pub fn write_csv(reports: &[RunReport], out: impl Write) -> Result<(), RunnerError> {
    let mut w = csv::Writer::from_writer(out);
    let fmt = |e: csv::Error| RunnerError::Format(e.to_string());
    for report in reports {
        for row in &report.rows {
            let phases: Vec<String> = row.phases.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let errors: Vec<String> = row.ate_errors.iter().map(f64::to_string).collect();
            w.serialize(CsvRow {
                algorithm: report.metadata.algorithm.clone(),
                frame: row.frame,
                timestamp: row.timestamp.to_string(),
                duration: row.duration,
                memory: row.memory,
                plugin_memory: row.plugin_memory,
                power: row.power,
                ate: row.ate,
                status: row.status,
                phases: phases.join(";"),
                ate_errors: errors.join(";"),
            })
            .map_err(fmt)?;
        }
    }
    w.flush().map_err(|e| RunnerError::Format(e.to_string()))
}

/// Reads rows back from CSV, grouped by algorithm in file order.
pub fn read_csv(input: impl std::io::Read) -> Result<Vec<(String, Vec<MetricRow>)>, RunnerError> {
    let mut groups: Vec<(String, Vec<MetricRow>)> = Vec::new();
    let bad = |what: &str, v: &str| RunnerError::Format(format!("bad {what} `{v}`"));
    for record in csv::Reader::from_reader(input).deserialize::<CsvRow>() {
        let r = record.map_err(|e| RunnerError::Format(e.to_string()))?;
        let mut row = MetricRow::new(r.frame, r.timestamp.parse().map_err(|_| bad("timestamp", &r.timestamp))?);
        row.duration = r.duration;
        row.memory = r.memory;
        row.plugin_memory = r.plugin_memory;
        row.power = r.power;
        row.ate = r.ate;
        row.status = r.status;
        for pair in r.phases.split(';').filter(|s| !s.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| bad("phase", pair))?;
            row.phases.insert(k.to_string(), v.parse().map_err(|_| bad("phase", pair))?);
        }
        for e in r.ate_errors.split(';').filter(|s| !s.is_empty()) {
            row.ate_errors.push(e.parse().map_err(|_| bad("ATE error", e))?);
        }
        match groups.last_mut() {
            Some((name, rows)) if *name == r.algorithm => rows.push(row),
            _ => groups.push((r.algorithm, vec![row])),
        }
    }
    Ok(groups)
}
