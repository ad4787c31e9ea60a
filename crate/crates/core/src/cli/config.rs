//! JSON configuration files with `--set path=value` overrides.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::harness::ConfigError;

/// Applies `path=value` to `root`, creating intermediate objects. The value
/// is parsed as JSON when possible and kept as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::new(assignment, "override must look like path=value"))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(ConfigError::new(path, "empty path segment"));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (k, seg) in segments.iter().enumerate() {
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Map::new());
            } else {
                return Err(ConfigError::new(segments[..k].join("."), "is not an object"));
            }
        }
        let map = node.as_object_mut().expect("object");
        if k + 1 == segments.len() {
            map.insert((*seg).into(), value);
            return Ok(());
        }
        node = map.entry(*seg).or_insert(Value::Null);
    }
    unreachable!("non-empty path")
}

/// Parses `text` (empty means `{}`), applies overrides and deserializes,
/// naming the offending field on failure.
pub fn load<T: DeserializeOwned>(text: Option<&str>, overrides: &[String]) -> Result<T, ConfigError> {
    let mut root: Value = match text {
        Some(t) => serde_json::from_str(t).map_err(|e| ConfigError::new("config", e.to_string()))?,
        None => Value::Object(Map::new()),
    };
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    serde_path_to_error::deserialize(root).map_err(|e| {
        let inner = e.inner().to_string();
        let path = e.path().to_string();
        let field = if path == "." {
            // missing or unknown fields are reported at the enclosing level
            inner.split('`').nth(1).unwrap_or("config").to_string()
        } else {
            path
        };
        ConfigError::new(field, inner)
    })
}

/// Parameter grid of the `bounds` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsGrid {
    /// Bound names; all of them when absent.
    #[serde(default)]
    pub names: Option<Vec<String>>,
    pub n: Vec<usize>,
    pub s: Vec<usize>,
    /// Budgets; `m = n` when absent.
    #[serde(default)]
    pub m: Option<Vec<f64>>,
    #[serde(default = "default_epsilons")]
    pub epsilon: Vec<f64>,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.1]
}
