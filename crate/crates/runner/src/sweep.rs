//! Parameter sweeps over a single algorithm.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use slambench_core::api::{ParamValue, ParameterSpec, ValueType};

use crate::bench::{run_benchmark, RunSpec};
use crate::overrides::describe_library;
use crate::pareto::{compute_pareto, Objectives, ParetoFront};
use crate::report::RunSummary;
use crate::RunnerError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    List { values: Vec<ParamValue> },
    /// `start, start + step, …` up to and including `end`.
    Range { start: f64, end: f64, step: f64 },
    /// `count` evenly spaced values for a grid; the continuous interval for
    /// random sampling.
    Span { min: f64, max: f64, count: usize },
}

impl Domain {
    /// The discrete values a grid visits.
    pub fn grid_values(&self) -> Result<Vec<ParamValue>, RunnerError> {
        match self {
            Domain::List { values } => Ok(values.clone()),
            Domain::Range { start, end, step } => {
                if !(*step > 0.0) || !(end >= start) {
                    return Err(RunnerError::InvalidSweep(format!("range {start}..{end} step {step} is empty")));
                }
                let n = ((end - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..n).map(|i| ParamValue::Real(start + i as f64 * step)).collect())
            }
            Domain::Span { min, max, count } => {
                if *count == 0 || !(max >= min) {
                    return Err(RunnerError::InvalidSweep(format!("span {min}..{max} with {count} values is empty")));
                }
                if *count == 1 {
                    return Ok(vec![ParamValue::Real(*min)]);
                }
                let step = (max - min) / (*count - 1) as f64;
                Ok((0..*count)
                    .map(|i| ParamValue::Real(if i + 1 == *count { *max } else { min + i as f64 * step }))
                    .collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweptParameter {
    pub name: String,
    pub domain: Domain,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    Grid,
    Random { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Must name exactly one algorithm; its fixed parameters apply to every
    /// configuration unless swept.
    pub base: RunSpec,
    pub parameters: Vec<SweptParameter>,
    pub strategy: Strategy,
    /// Configurations run concurrently. Above 1, durations are perturbed by
    /// the co-running work and samples are flagged accordingly.
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub index: usize,
    pub parameters: BTreeMap<String, ParamValue>,
    /// Present when the run completed with both objectives.
    pub objectives: Option<Objectives>,
    pub summary: Option<RunSummary>,
    pub failure: Option<String>,
    /// False when the sample ran alongside other configurations.
    pub timing_reliable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub samples: Vec<SweepSample>,
    pub front: ParetoFront,
}

/// Checks the sweep against the algorithm's declarations and lists the
/// configurations to run.
pub fn plan_sweep(spec: &SweepSpec) -> Result<Vec<BTreeMap<String, ParamValue>>, RunnerError> {
    let [algorithm] = spec.base.algorithms.as_slice() else {
        return Err(RunnerError::InvalidSweep(format!(
            "a sweep runs one algorithm, {} given",
            spec.base.algorithms.len()
        )));
    };
    spec.base.validate()?;
    let declared = describe_library(&algorithm.library)?.parameters;
    plan_with(spec, &declared)
}

/// As [`plan_sweep`] against known declarations.
pub fn plan_with(spec: &SweepSpec, declared: &[ParameterSpec]) -> Result<Vec<BTreeMap<String, ParamValue>>, RunnerError> {
    let mut specs = Vec::new();
    for p in &spec.parameters {
        let decl = declared
            .iter()
            .find(|d| d.matches(&p.name))
            .ok_or_else(|| RunnerError::InvalidSweep(format!("`{}` is not a declared parameter", p.name)))?;
        if specs.iter().any(|(d, _): &(&ParameterSpec, _)| d.long_name == decl.long_name) {
            return Err(RunnerError::InvalidSweep(format!("`{}` is swept twice", decl.long_name)));
        }
        specs.push((decl, &p.domain));
    }
    if specs.is_empty() {
        return Err(RunnerError::InvalidSweep("no parameter to sweep".into()));
    }
    let check = |decl: &ParameterSpec, v: ParamValue| -> Result<ParamValue, RunnerError> {
        let v = match v {
            ParamValue::Str(text) if decl.value_type != ValueType::String => {
                ParamValue::parse_as(decl.value_type, &text).map_err(RunnerError::InvalidSweep)?
            }
            v => v,
        };
        decl.check(v).map_err(|e| RunnerError::InvalidSweep(e.to_string()))
    };

    match spec.strategy {
        Strategy::Grid => {
            let mut axes = Vec::new();
            for (decl, domain) in &specs {
                let values = domain
                    .grid_values()?
                    .into_iter()
                    .map(|v| check(decl, v))
                    .collect::<Result<Vec<_>, _>>()?;
                axes.push((decl.long_name.clone(), values));
            }
            let mut configs = vec![BTreeMap::new()];
            for (name, values) in &axes {
                configs = configs
                    .into_iter()
                    .flat_map(|c| {
                        values.iter().map(move |v| {
                            let mut c = c.clone();
                            c.insert(name.clone(), v.clone());
                            c
                        })
                    })
                    .collect();
            }
            Ok(configs)
        }
        Strategy::Random { samples, seed } => {
            // discrete domains are validated whole; continuous spans by their ends
            for (decl, domain) in &specs {
                match domain {
                    Domain::Span { min, max, .. } => {
                        if !(max >= min) {
                            return Err(RunnerError::InvalidSweep(format!("span {min}..{max} is empty")));
                        }
                        check(decl, ParamValue::Real(*min).coerce(decl.value_type).unwrap_or(ParamValue::Real(*min)))?;
                        check(decl, ParamValue::Real(*max).coerce(decl.value_type).unwrap_or(ParamValue::Real(*max)))?;
                    }
                    d => {
                        let values = d.grid_values()?;
                        if values.is_empty() {
                            return Err(RunnerError::InvalidSweep(format!("`{}` has no values", decl.long_name)));
                        }
                        for v in values {
                            check(decl, v)?;
                        }
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut configs = Vec::with_capacity(samples);
            for _ in 0..samples {
                let mut c = BTreeMap::new();
                for (decl, domain) in &specs {
                    let v = match domain {
                        Domain::Span { min, max, .. } => match decl.value_type {
                            ValueType::Int => ParamValue::Int(rng.random_range(min.ceil() as i64..=max.floor() as i64)),
                            _ => ParamValue::Real(if max > min { rng.random_range(*min..=*max) } else { *min }),
                        },
                        d => {
                            let values = d.grid_values()?;
                            values[rng.random_range(0..values.len())].clone()
                        }
                    };
                    c.insert(decl.long_name.clone(), check(decl, v)?);
                }
                configs.push(c);
            }
            Ok(configs)
        }
    }
}

fn run_configuration(base: &RunSpec, index: usize, parameters: BTreeMap<String, ParamValue>, reliable: bool) -> SweepSample {
    let mut spec = base.clone();
    spec.algorithms[0].parameters.extend(parameters.clone());
    let mut sample = SweepSample {
        index,
        parameters,
        objectives: None,
        summary: None,
        failure: None,
        timing_reliable: reliable,
    };
    match run_benchmark(spec) {
        Ok(mut reports) => {
            let report = reports.remove(0);
            let s = &report.summary.rows;
            sample.failure = report.metadata.failure.clone();
            match (s.mean_duration, s.ate_rmse) {
                (Some(d), Some(a)) if sample.failure.is_none() => sample.objectives = Some(Objectives::new(d, a)),
                _ if sample.failure.is_none() => sample.failure = Some("run produced no duration or no matched pose".into()),
                _ => {}
            }
            sample.summary = Some(report.summary);
        }
        Err(e) => sample.failure = Some(e.to_string()),
    }
    if let Some(f) = &sample.failure {
        log::warn!("sweep configuration {index} failed: {f}");
    }
    sample
}

/// Runs every configuration with a fresh algorithm instance and extracts
/// the Pareto front of (mean duration, ATE RMSE).
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome, RunnerError> {
    let configs = plan_sweep(spec)?;
    let workers = spec.workers.max(1).min(configs.len().max(1));
    let reliable = workers == 1;
    let samples = if workers == 1 {
        configs
            .into_iter()
            .enumerate()
            .map(|(i, c)| run_configuration(&spec.base, i, c, true))
            .collect()
    } else {
        let next = AtomicUsize::new(0);
        let results = Mutex::new(Vec::with_capacity(configs.len()));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(c) = configs.get(i) else { break };
                    let sample = run_configuration(&spec.base, i, c.clone(), reliable);
                    results.lock().unwrap().push(sample);
                });
            }
        });
        let mut samples = results.into_inner().unwrap();
        samples.sort_by_key(|s| s.index);
        samples
    };
    let front = compute_pareto(&samples)?;
    Ok(SweepOutcome { samples, front })
}
