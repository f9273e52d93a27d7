use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;
use xmf_core::io::{IoError, Provenance};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    NoResult(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::NoResult(_) => 4,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e.to_string())
    }
}

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Seed and config shared by every subcommand.
pub struct RunContext {
    pub seed: u64,
    config: Option<Value>,
}

impl RunContext {
    pub fn new(seed: u64, config_path: Option<&Path>) -> Result<Self, CliError> {
        let config = match config_path {
            None => None,
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
                let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                if !v.is_object() {
                    return Err(CliError::Usage(format!("{}: config must be a JSON object", p.display())));
                }
                Some(v)
            }
        };
        Ok(Self { seed, config })
    }

    /// Defaults, overlaid by the config file section `section`, overlaid by
    /// the flags given on the command line.
    pub fn resolve<P, F>(&self, section: &str, defaults: P, flags: &F) -> Result<P, CliError>
    where
        P: Serialize + DeserializeOwned,
        F: Serialize,
    {
        let mut merged = serde_json::to_value(defaults).expect("params serialize");
        if let Some(Value::Object(over)) = self.config.as_ref().and_then(|c| c.get(section)) {
            overlay(&mut merged, over, section)?;
        }
        if let Value::Object(over) = serde_json::to_value(flags).expect("flags serialize") {
            overlay(&mut merged, &over, section)?;
        }
        serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("{section}: {e}")))
    }

    pub fn provenance<P: Serialize>(&self, params: &P) -> Provenance {
        let canonical = serde_json::to_string(params).expect("params serialize");
        let digest = Sha256::digest(canonical.as_bytes());
        Provenance {
            tool_version: format!("xmf {}", xmf_core::VERSION),
            seed: self.seed,
            config_hash: hex::encode(&digest[..8]),
        }
    }
}

fn overlay(base: &mut Value, over: &serde_json::Map<String, Value>, section: &str) -> Result<(), CliError> {
    let Value::Object(base) = base else { unreachable!("params are objects") };
    for (k, v) in over {
        if v.is_null() {
            continue;
        }
        if !base.contains_key(k) {
            return Err(CliError::Usage(format!("{section}: unknown parameter {k:?}")));
        }
        base.insert(k.clone(), v.clone());
    }
    Ok(())
}

pub fn require_dir(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(io_err(path, "no such directory"))
    }
}

pub fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(io_err(path, "no such file"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct P {
        a: u32,
        b: f64,
    }

    #[derive(Serialize)]
    struct F {
        #[serde(skip_serializing_if = "Option::is_none")]
        a: Option<u32>,
    }

    #[test]
    fn flags_override_config_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"s": {"a": 5, "b": 2.5}}"#).unwrap();
        let ctx = RunContext::new(1, Some(&p)).unwrap();
        assert_eq!(ctx.resolve("s", P { a: 1, b: 1.0 }, &F { a: None }).unwrap(), P { a: 5, b: 2.5 });
        assert_eq!(ctx.resolve("s", P { a: 1, b: 1.0 }, &F { a: Some(9) }).unwrap(), P { a: 9, b: 2.5 });
        assert_eq!(ctx.resolve("t", P { a: 1, b: 1.0 }, &F { a: None }).unwrap(), P { a: 1, b: 1.0 });
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"s": {"zzz": 5}}"#).unwrap();
        let ctx = RunContext::new(1, Some(&p)).unwrap();
        assert!(matches!(ctx.resolve("s", P { a: 1, b: 1.0 }, &F { a: None }), Err(CliError::Usage(_))));
    }

    #[test]
    fn provenance_hash_is_stable() {
        let ctx = RunContext::new(3, None).unwrap();
        let a = ctx.provenance(&P { a: 1, b: 2.0 });
        assert_eq!(a, ctx.provenance(&P { a: 1, b: 2.0 }));
        assert_ne!(a.config_hash, ctx.provenance(&P { a: 2, b: 2.0 }).config_hash);
        assert_eq!(a.config_hash.len(), 16);
    }
}
