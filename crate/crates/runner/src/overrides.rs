//! `--<algorithm>-<parameter> <value>` overrides on the command line.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use slambench_core::api::{load_algorithm, ParamValue, ParameterSpec};

use crate::RunnerError;

/// An algorithm library and the parameters it declares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmDescription {
    pub name: String,
    pub library: PathBuf,
    pub parameters: Vec<ParameterSpec>,
}

/// Loads `library` into a throwaway handle to read its declarations.
pub fn describe_library(library: &Path) -> Result<AlgorithmDescription, RunnerError> {
    let mut handle = load_algorithm(library).map_err(|source| RunnerError::Algorithm {
        algorithm: library.display().to_string(),
        source,
    })?;
    let result = handle.new_configuration();
    let description = AlgorithmDescription {
        name: handle.name().to_string(),
        library: library.to_path_buf(),
        parameters: handle.config().specs(),
    };
    if result.is_ok() {
        let _ = handle.clean();
    }
    result.map_err(|source| RunnerError::Algorithm {
        algorithm: description.name.clone(),
        source,
    })?;
    Ok(description)
}

/// Maps raw `(key, value)` overrides, key without the leading `--`, onto
/// per-algorithm parameter sets. Every key the algorithms could accept is
/// checked for ambiguity up front, so a colliding pair is rejected even if
/// the override is never used.
pub fn resolve_overrides(
    algorithms: &[AlgorithmDescription],
    overrides: &[(String, String)],
) -> Result<Vec<BTreeMap<String, ParamValue>>, RunnerError> {
    let mut keys: HashMap<String, (usize, &ParameterSpec)> = HashMap::new();
    for (i, a) in algorithms.iter().enumerate() {
        for spec in &a.parameters {
            let key = format!("{}-{}", a.name, spec.long_name);
            if let Some((j, other)) = keys.insert(key.clone(), (i, spec)) {
                return Err(RunnerError::Override(format!(
                    "--{key} is ambiguous: {}/{} and {}/{}",
                    algorithms[j].name, other.long_name, a.name, spec.long_name
                )));
            }
        }
    }
    let mut out = vec![BTreeMap::new(); algorithms.len()];
    for (key, text) in overrides {
        let (i, spec) = keys
            .get(key.as_str())
            .ok_or_else(|| RunnerError::Override(format!("--{key} matches no declared parameter")))?;
        let value = ParamValue::parse_as(spec.value_type, text)
            .map_err(|e| RunnerError::Override(format!("--{key}: {e}")))
            .and_then(|v| spec.check(v).map_err(|e| RunnerError::Override(format!("--{key}: {e}"))))?;
        out[*i].insert(spec.long_name.clone(), value);
    }
    Ok(out)
}
