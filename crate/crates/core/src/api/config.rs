use std::ffi::CString;

use super::outputs::{OutputChannel, OutputKind, OutputValue};
use super::params::{ParamValue, Parameter, ParameterSpec};
use super::ApiError;
use crate::datafile::SensorDescriptor;
use crate::geometry::Timestamp;

/// What an algorithm can see and do through its configuration object:
/// declare parameters, read their values and the sensor table, register
/// output channels and publish to them.
pub trait ConfigApi {
    /// Returns false when the name is already taken or the spec is invalid.
    fn declare_parameter(&mut self, spec: ParameterSpec) -> bool;
    /// Current value by long or short name.
    fn parameter(&self, name: &str) -> Option<ParamValue>;
    fn sensors(&self) -> Vec<SensorDescriptor>;
    fn ui_enabled(&self) -> bool;
    fn register_output(&mut self, name: &str, kind: OutputKind) -> bool;
    fn publish(&mut self, name: &str, timestamp: Timestamp, value: OutputValue<'_>) -> bool;

    fn param_int(&self, name: &str) -> Option<i64> {
        self.parameter(name)?.as_int()
    }

    fn param_real(&self, name: &str) -> Option<f64> {
        self.parameter(name)?.as_real()
    }

    fn param_bool(&self, name: &str) -> Option<bool> {
        self.parameter(name)?.as_bool()
    }

    fn param_str(&self, name: &str) -> Option<String> {
        Some(self.parameter(name)?.as_str()?.to_string())
    }
}

/// Which calls the configuration currently accepts from the algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ConfigPhase {
    Idle,
    Declaring,
    Initialising,
    Running,
}

/// Harness-side configuration object shared with one algorithm instance.
#[derive(Debug)]
pub struct AlgorithmConfig {
    params: Vec<Parameter>,
    sensors: Vec<SensorDescriptor>,
    ui_enabled: bool,
    channels: Vec<OutputChannel>,
    pub(crate) phase: ConfigPhase,
    sensors_frozen: bool,
    violations: Vec<ApiError>,
    /// Backing store for string parameters handed across the C boundary.
    pub(crate) scratch: CString,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self::new()
    }
}

impl AlgorithmConfig {
    pub fn new() -> Self {
        Self {
            params: Vec::new(),
            sensors: Vec::new(),
            ui_enabled: false,
            channels: Vec::new(),
            phase: ConfigPhase::Idle,
            sensors_frozen: false,
            violations: Vec::new(),
            scratch: CString::default(),
        }
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.params
    }

    pub fn specs(&self) -> Vec<ParameterSpec> {
        self.params.iter().map(|p| p.spec.clone()).collect()
    }

    fn find(&self, name: &str) -> Option<usize> {
        self.params
            .iter()
            .position(|p| p.spec.long_name == name)
            .or_else(|| self.params.iter().position(|p| p.spec.short_name == name))
    }

    /// Sets a declared parameter, returning the previous value. After
    /// initialisation only live parameters may change.
    pub fn set_parameter(&mut self, name: &str, value: ParamValue) -> Result<ParamValue, ApiError> {
        let i = self.find(name).ok_or_else(|| ApiError::UnknownParameter(name.to_string()))?;
        let p = &mut self.params[i];
        if self.sensors_frozen && !p.spec.live {
            return Err(ApiError::NotLive(p.spec.long_name.clone()));
        }
        let value = p.spec.check(value)?;
        Ok(std::mem::replace(&mut p.current, value))
    }

    pub fn sensor_table(&self) -> &[SensorDescriptor] {
        &self.sensors
    }

    /// Replaces the visible sensor table; refused once initialisation began.
    pub fn set_sensors(&mut self, sensors: Vec<SensorDescriptor>) -> Result<(), ApiError> {
        if self.sensors_frozen {
            return Err(ApiError::SensorsFrozen);
        }
        self.sensors = sensors;
        Ok(())
    }

    pub fn set_ui_enabled(&mut self, enabled: bool) {
        self.ui_enabled = enabled;
    }

    pub(crate) fn freeze_sensors(&mut self) {
        self.sensors_frozen = true;
    }

    pub fn channels(&self) -> &[OutputChannel] {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Option<&OutputChannel> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub(crate) fn record(&mut self, violation: ApiError) {
        log::warn!("plugin contract violation: {violation}");
        self.violations.push(violation);
    }

    pub(crate) fn take_violations(&mut self) -> Vec<ApiError> {
        std::mem::take(&mut self.violations)
    }
}

impl ConfigApi for AlgorithmConfig {
    fn declare_parameter(&mut self, spec: ParameterSpec) -> bool {
        if self.phase != ConfigPhase::Declaring {
            self.record(ApiError::Lifecycle {
                call: "declare_parameter",
                detail: "parameters can only be declared while configuring".into(),
            });
            return false;
        }
        if let Err(reason) = spec.validate() {
            self.record(ApiError::InvalidParameter(reason));
            return false;
        }
        let taken = |n: &str| !n.is_empty() && self.params.iter().any(|p| p.spec.matches(n));
        if taken(&spec.long_name) || taken(&spec.short_name) {
            self.record(ApiError::DuplicateParameter(spec.long_name.clone()));
            return false;
        }
        self.params.push(Parameter {
            current: spec.default.clone(),
            spec,
        });
        true
    }

    fn parameter(&self, name: &str) -> Option<ParamValue> {
        self.find(name).map(|i| self.params[i].current.clone())
    }

    fn sensors(&self) -> Vec<SensorDescriptor> {
        self.sensors.clone()
    }

    fn ui_enabled(&self) -> bool {
        self.ui_enabled
    }

    fn register_output(&mut self, name: &str, kind: OutputKind) -> bool {
        if !matches!(self.phase, ConfigPhase::Declaring | ConfigPhase::Initialising) {
            self.record(ApiError::Lifecycle {
                call: "register_output",
                detail: "outputs can only be registered before the first frame".into(),
            });
            return false;
        }
        match self.channel(name) {
            Some(c) if c.kind == kind => true,
            Some(c) => {
                let existing = c.kind;
                self.record(ApiError::OutputMismatch {
                    channel: name.to_string(),
                    reason: format!("already registered as {existing:?}"),
                });
                false
            }
            None => {
                self.channels.push(OutputChannel::new(name, kind));
                true
            }
        }
    }

    fn publish(&mut self, name: &str, timestamp: Timestamp, value: OutputValue<'_>) -> bool {
        let Some(i) = self.channels.iter().position(|c| c.name == name) else {
            self.record(ApiError::OutputMismatch {
                channel: name.to_string(),
                reason: "not registered".into(),
            });
            return false;
        };
        if !value.kind_matches(self.channels[i].kind) {
            let kind = self.channels[i].kind;
            self.record(ApiError::OutputMismatch {
                channel: name.to_string(),
                reason: format!("value does not fit a {kind:?} channel"),
            });
            return false;
        }
        let channel = &mut self.channels[i];
        channel.latest = Some((timestamp, value.to_owned()));
        channel.version += 1;
        true
    }
}
