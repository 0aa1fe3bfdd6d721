use std::fmt;

use serde::{Deserialize, Serialize};

use super::ApiError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u32)]
pub enum ValueType {
    Int = 0,
    Real = 1,
    Bool = 2,
    String = 3,
}

impl ValueType {
    pub fn from_u32(v: u32) -> Option<Self> {
        Some(match v {
            0 => Self::Int,
            1 => Self::Real,
            2 => Self::Bool,
            3 => Self::String,
            _ => return None,
        })
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Int => "int",
            ValueType::Real => "real",
            ValueType::Bool => "bool",
            ValueType::String => "string",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
}

impl ParamValue {
    pub fn value_type(&self) -> ValueType {
        match self {
            ParamValue::Int(_) => ValueType::Int,
            ParamValue::Real(_) => ValueType::Real,
            ParamValue::Bool(_) => ValueType::Bool,
            ParamValue::Str(_) => ValueType::String,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            ParamValue::Real(v) => Some(*v),
            ParamValue::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            ParamValue::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Str(v) => Some(v),
            _ => None,
        }
    }

    /// Parses command-line text as a value of type `ty`.
    pub fn parse_as(ty: ValueType, text: &str) -> Result<ParamValue, String> {
        let text = text.trim();
        match ty {
            ValueType::Int => text.parse().map(ParamValue::Int).map_err(|_| format!("`{text}` is not an integer")),
            ValueType::Real => text.parse().map(ParamValue::Real).map_err(|_| format!("`{text}` is not a number")),
            ValueType::Bool => match text {
                "true" | "1" | "on" | "yes" => Ok(ParamValue::Bool(true)),
                "false" | "0" | "off" | "no" => Ok(ParamValue::Bool(false)),
                _ => Err(format!("`{text}` is not a boolean")),
            },
            ValueType::String => Ok(ParamValue::Str(text.to_string())),
        }
    }

    /// Converts to `ty` where that loses nothing (integral reals to int, ints
    /// to real).
    pub fn coerce(self, ty: ValueType) -> Option<ParamValue> {
        match (self, ty) {
            (v, t) if v.value_type() == t => Some(v),
            (ParamValue::Int(i), ValueType::Real) => Some(ParamValue::Real(i as f64)),
            (ParamValue::Real(r), ValueType::Int) if r.fract() == 0.0 && r.abs() < 9.0e15 => Some(ParamValue::Int(r as i64)),
            _ => None,
        }
    }

    fn numeric(&self) -> Option<f64> {
        match self {
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Real(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Real(v)
    }
}

impl From<bool> for ParamValue {
    fn from(v: bool) -> Self {
        ParamValue::Bool(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Str(v.to_string())
    }
}

impl From<String> for ParamValue {
    fn from(v: String) -> Self {
        ParamValue::Str(v)
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Bool(v) => write!(f, "{v}"),
            ParamValue::Str(v) => f.write_str(v),
        }
    }
}

/// A tunable declared by an algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub short_name: String,
    pub long_name: String,
    pub description: String,
    pub value_type: ValueType,
    pub default: ParamValue,
    /// Inclusive numeric bounds, for int and real parameters.
    pub bounds: Option<(f64, f64)>,
    /// May change after initialisation.
    pub live: bool,
}

impl ParameterSpec {
    pub fn new(short_name: &str, long_name: &str, description: &str, default: ParamValue) -> Self {
        Self {
            short_name: short_name.to_string(),
            long_name: long_name.to_string(),
            description: description.to_string(),
            value_type: default.value_type(),
            default,
            bounds: None,
            live: false,
        }
    }

    pub fn int(short_name: &str, long_name: &str, description: &str, default: i64) -> Self {
        Self::new(short_name, long_name, description, ParamValue::Int(default))
    }

    pub fn real(short_name: &str, long_name: &str, description: &str, default: f64) -> Self {
        Self::new(short_name, long_name, description, ParamValue::Real(default))
    }

    pub fn boolean(short_name: &str, long_name: &str, description: &str, default: bool) -> Self {
        Self::new(short_name, long_name, description, ParamValue::Bool(default))
    }

    pub fn string(short_name: &str, long_name: &str, description: &str, default: &str) -> Self {
        Self::new(short_name, long_name, description, ParamValue::Str(default.to_string()))
    }

    pub fn bounded(mut self, min: f64, max: f64) -> Self {
        self.bounds = Some((min, max));
        self
    }

    pub fn live(mut self) -> Self {
        self.live = true;
        self
    }

    pub fn matches(&self, name: &str) -> bool {
        self.long_name == name || self.short_name == name
    }

    /// Type-checks and bound-checks `value`, coercing between int and real
    /// where exact.
    pub fn check(&self, value: ParamValue) -> Result<ParamValue, ApiError> {
        let value = value.coerce(self.value_type).ok_or_else(|| ApiError::ParameterType {
            name: self.long_name.clone(),
            expected: self.value_type,
        })?;
        if let (Some((min, max)), Some(v)) = (self.bounds, value.numeric()) {
            if !(v >= min && v <= max) {
                return Err(ApiError::OutOfBounds {
                    name: self.long_name.clone(),
                    value: v,
                    min,
                    max,
                });
            }
        }
        Ok(value)
    }

    /// Structural validity of the declaration itself.
    pub fn validate(&self) -> Result<(), String> {
        if self.long_name.is_empty() {
            return Err("empty long name".into());
        }
        let name_ok = |n: &str| n.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !name_ok(&self.long_name) || !name_ok(&self.short_name) {
            return Err(format!("parameter names must be alphanumeric, `-` or `_`: {}", self.long_name));
        }
        if self.default.value_type() != self.value_type {
            return Err(format!("default of {} is not a {}", self.long_name, self.value_type));
        }
        if let Some((min, max)) = self.bounds {
            if !(min <= max) {
                return Err(format!("bounds of {} are inverted", self.long_name));
            }
        }
        self.check(self.default.clone()).map(|_| ()).map_err(|e| e.to_string())
    }
}

/// A declared parameter together with its current value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub spec: ParameterSpec,
    pub current: ParamValue,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip_each_type() {
        for (ty, text, value) in [
            (ValueType::Int, "-42", ParamValue::Int(-42)),
            (ValueType::Real, "0.125", ParamValue::Real(0.125)),
            (ValueType::Bool, "true", ParamValue::Bool(true)),
            (ValueType::String, "fr1", ParamValue::Str("fr1".into())),
        ] {
            let parsed = ParamValue::parse_as(ty, text).unwrap();
            assert_eq!(parsed, value);
            assert_eq!(ParamValue::parse_as(ty, &parsed.to_string()).unwrap(), value);
            let json = serde_json::to_string(&value).unwrap();
            assert_eq!(serde_json::from_str::<ParamValue>(&json).unwrap().coerce(ty), Some(value));
        }
        assert!(ParamValue::parse_as(ValueType::Int, "1.5").is_err());
        assert!(ParamValue::parse_as(ValueType::Bool, "maybe").is_err());
    }

    #[test]
    fn bounds_and_coercion() {
        let spec = ParameterSpec::int("s", "stride", "pixel stride", 2).bounded(1.0, 16.0);
        assert_eq!(spec.check(ParamValue::Real(4.0)).unwrap(), ParamValue::Int(4));
        assert!(matches!(spec.check(ParamValue::Int(0)), Err(ApiError::OutOfBounds { .. })));
        assert!(matches!(spec.check(ParamValue::Real(2.5)), Err(ApiError::ParameterType { .. })));
        assert!(matches!(spec.check(ParamValue::Bool(true)), Err(ApiError::ParameterType { .. })));
        assert!(spec.validate().is_ok());
        assert!(ParameterSpec::int("s", "stride", "", 0).bounded(1.0, 16.0).validate().is_err());
        assert!(ParameterSpec::int("s", "bad name", "", 0).validate().is_err());
    }
}
