//! Resolution of run parameters: flag > config file > `ALLOCLAB_SEED` >
//! built-in default.

use std::path::Path;

use serde_json::{Map, Value};

use crate::CliError;

pub const SEED_ENV: &str = "ALLOCLAB_SEED";

/// Parses a flag value: JSON when it reads as JSON, a list for
/// comma-separated items, otherwise a plain string.
pub fn parse_flag(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return v;
    }
    if raw.contains(',') {
        return Value::Array(raw.split(',').map(|s| parse_flag(s.trim())).collect());
    }
    Value::String(raw.to_string())
}

/// Reads a config file: either a bare parameter object or a manifest with
/// `command` and `parameters`.
pub fn read_file(path: &Path, command: &str) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!("config {} is not valid JSON: {e}", path.display()))
    })?;
    let Value::Object(mut map) = value else {
        return Err(CliError::Config(format!(
            "config {} must be a JSON object",
            path.display()
        )));
    };
    if let Some(cmd) = map.get("command") {
        if cmd.as_str() != Some(command) {
            return Err(CliError::Config(format!(
                "config is for command {cmd}, not {command}"
            )));
        }
    }
    match map.remove("parameters") {
        Some(Value::Object(params)) => Ok(params),
        Some(_) => Err(CliError::Config("`parameters` must be an object".into())),
        None => {
            map.remove("command");
            Ok(map)
        }
    }
}

pub fn seed_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| {
            CliError::Config(format!("{SEED_ENV} must be an unsigned integer, got {s:?}"))
        }),
        Err(_) => Ok(None),
    }
}

/// Layers the sources, lowest precedence first.
pub fn resolve(
    defaults: Map<String, Value>,
    env_seed: Option<u64>,
    file: Map<String, Value>,
    flags: Map<String, Value>,
) -> Map<String, Value> {
    let mut out = defaults;
    if let Some(seed) = env_seed {
        out.insert("seed".into(), seed.into());
    }
    out.extend(file);
    out.extend(flags);
    out
}
