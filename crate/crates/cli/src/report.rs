use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};

/// The JSON document every command emits.
pub struct Report {
    command: &'static str,
    seed: u64,
    params: Value,
    results: Map<String, Value>,
    timings: Map<String, Value>,
}

impl Report {
    pub fn new(command: &'static str, seed: u64, params: &impl Serialize) -> Self {
        Self {
            command,
            seed,
            params: serde_json::to_value(params).unwrap_or(Value::Null),
            results: Map::new(),
            timings: Map::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.results
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// Runs `f` and records its wall time in milliseconds under `key`.
    pub fn time<T>(&mut self, key: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.insert(key.to_string(), json!(t.elapsed().as_secs_f64() * 1e3));
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "seed": self.seed,
            "params": self.params,
            "results": self.results,
            "timings": self.timings,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }

    pub fn write(&self, out: Option<&str>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json()).map_err(|e| CliError::Output(e.to_string()))?;
        match out {
            Some(path) => std::fs::write(path, text + "\n").map_err(|e| CliError::Output(format!("{path}: {e}"))),
            None => {
                println!("{text}");
                Ok(())
            }
        }
    }
}

/// Non-finite floats become `null` in JSON; keep the sign visible instead.
pub fn finite_or_label(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}
