//! Run manifests: what was run, with which resolved configuration.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ConfigFile;
use crate::expkit::ScenarioConfig;

pub const TOOL_VERSION: &str = concat!("omcr ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub tool_version: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// `params` holds command arguments that are not part of the scenario
    /// (site-count steps, file names of inputs, ...).
    pub fn new(command: &str, config: &ScenarioConfig, params: Value) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            config_digest: config_digest(command, config, &params),
            seed: config.seed,
            tool_version: TOOL_VERSION.to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// JSON text with object keys sorted at every level and no whitespace.
pub fn canonical_json(v: &Value) -> String {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .into_iter()
                .map(|k| format!("{}:{}", Value::String(k.clone()), canonical_json(&map[k])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(items) => {
            let body: Vec<String> = items.iter().map(canonical_json).collect();
            format!("[{}]", body.join(","))
        }
        other => other.to_string(),
    }
}

/// SHA-256 (hex) of the canonical JSON of command, resolved configuration,
/// extra parameters and tool version.
pub fn config_digest(command: &str, config: &ScenarioConfig, params: &Value) -> String {
    let doc = serde_json::json!({
        "command": command,
        "config": ConfigFile::from_scenario(config),
        "params": params,
        "tool_version": TOOL_VERSION,
    });
    hex::encode(Sha256::digest(canonical_json(&doc).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ConfigFile, DEFAULTS_TOML};

    #[test]
    fn canonical_json_sorts_keys() {
        let a: Value = serde_json::from_str(r#"{"b":1,"a":{"d":[1,2],"c":"x"}}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a":{"c":"x","d":[1,2]},"b":1}"#).unwrap();
        assert_eq!(canonical_json(&a), canonical_json(&b));
        assert_eq!(canonical_json(&a), r#"{"a":{"c":"x","d":[1,2]},"b":1}"#);
    }

    #[test]
    fn digest_ignores_key_order_in_file() {
        let reordered = DEFAULTS_TOML.replace("rel_tol = 0.01\nmax_iter = 20\n", "max_iter = 20\nrel_tol = 0.01\n");
        assert_ne!(reordered, DEFAULTS_TOML);
        let a = ConfigFile::parse_str(DEFAULTS_TOML).unwrap().resolve().unwrap();
        let b = ConfigFile::parse_str(&reordered).unwrap().resolve().unwrap();
        let p = serde_json::json!({});
        assert_eq!(config_digest("solve", &a, &p), config_digest("solve", &b, &p));
        let c = ScenarioConfig { seed: 2, ..a.clone() };
        assert_ne!(config_digest("solve", &a, &p), config_digest("solve", &c, &p));
        assert_ne!(config_digest("solve", &a, &p), config_digest("horizon-sweep", &a, &p));
    }
}
