//! Config files, `--set` overrides and seed offsets.

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::Path;

/// Schema version written into every resolved config.
pub const CONFIG_VERSION: u64 = 1;

/// Reads a JSON object, or `{}` without a file.
pub fn load(path: Option<&Path>) -> Result<Value> {
    let Some(path) = path else {
        return Ok(Value::Object(Map::new()));
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("config {} is not valid JSON", path.display()))?;
    if !v.is_object() {
        bail!("config {} must hold a JSON object", path.display());
    }
    Ok(v)
}

/// `a.b.c=value`: the value is parsed as JSON and taken as a string otherwise.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| anyhow!("override {spec:?} is not of the form key=value"))?;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override key {key:?} has an empty component");
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let obj = match cur {
            Value::Object(m) => m,
            other if other.is_null() => {
                *other = Value::Object(Map::new());
                other.as_object_mut().unwrap()
            }
            _ => bail!("override {key:?}: {} is not an object", parts[..i].join(".")),
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!()
}

/// Adds `by` to every integer `seed` key, at any depth.
pub fn offset_seeds(v: &mut Value, by: u64) {
    match v {
        Value::Object(m) => {
            for (k, x) in m.iter_mut() {
                match x {
                    Value::Number(n) if k == "seed" => {
                        if let Some(s) = n.as_u64() {
                            *x = Value::from(s.wrapping_add(by));
                        }
                    }
                    _ => offset_seeds(x, by),
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(|x| offset_seeds(x, by)),
        _ => {}
    }
}

/// Checks and strips `version`, then deserializes.
pub fn resolve<T: DeserializeOwned>(mut v: Value) -> Result<T> {
    if let Some(obj) = v.as_object_mut() {
        if let Some(ver) = obj.remove("version") {
            if ver.as_u64() != Some(CONFIG_VERSION) {
                bail!("unsupported config version {ver}, expected {CONFIG_VERSION}");
            }
        }
    }
    serde_json::from_value(v).map_err(|e| anyhow!("invalid config: {e}"))
}

/// The resolved config as written next to the outputs.
pub fn versioned<T: Serialize>(cfg: &T) -> Result<Value> {
    let mut v = serde_json::to_value(cfg)?;
    if let Some(obj) = v.as_object_mut() {
        obj.insert("version".into(), Value::from(CONFIG_VERSION));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_create_nested_keys_and_parse_json() {
        let mut v = json!({"solver": {"mu": 0.1}});
        apply_override(&mut v, "solver.mu=0.05").unwrap();
        apply_override(&mut v, "solver.grid.sizes=[32,32]").unwrap();
        apply_override(&mut v, "data.density.family=zero").unwrap();
        assert_eq!(v, json!({"solver": {"mu": 0.05, "grid": {"sizes": [32, 32]}}, "data": {"density": {"family": "zero"}}}));
        assert!(apply_override(&mut v, "solver.mu.x=1").is_err());
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "a..b=1").is_err());
    }

    #[test]
    fn seeds_are_offset_everywhere() {
        let mut v = json!({"seed": 1, "laws": [{"seed": 2}], "x": {"seed": "s"}, "y": {"z": {"seed": 3}}});
        offset_seeds(&mut v, 10);
        assert_eq!(v, json!({"seed": 11, "laws": [{"seed": 12}], "x": {"seed": "s"}, "y": {"z": {"seed": 13}}}));
    }

    #[test]
    fn version_is_checked() {
        #[derive(serde::Deserialize, Debug)]
        #[serde(deny_unknown_fields)]
        struct C {
            #[allow(dead_code)]
            a: u32,
        }
        assert!(resolve::<C>(json!({"version": 1, "a": 2})).is_ok());
        assert!(resolve::<C>(json!({"version": 2, "a": 2})).is_err());
        assert!(resolve::<C>(json!({"a": 2, "b": 1})).is_err());
    }
}
