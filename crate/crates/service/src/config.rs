use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for {var}: {value:?}")]
    Env { var: &'static str, value: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    /// Holds `events.jsonl` and `snapshot.json`.
    pub data_dir: PathBuf,
    pub session_ttl_secs: u64,
    /// Write a snapshot after this many events; 0 disables snapshots.
    pub snapshot_every: u64,
    /// Static files (e.g. a built web UI) served for unmatched paths.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1".into(),
            port: 8080,
            data_dir: PathBuf::from("gos-data"),
            session_ttl_secs: 3600,
            snapshot_every: 500,
            static_dir: None,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` if given, then applies `GOS_PORT`, `GOS_DATA_DIR` and
    /// `GOS_SESSION_TTL_SECS` from the environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_toml_str(&text)?
            }
            None => ServiceConfig::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = get("GOS_PORT") {
            self.port = v.parse().map_err(|_| ConfigError::Env {
                var: "GOS_PORT",
                value: v,
            })?;
        }
        if let Some(v) = get("GOS_DATA_DIR") {
            self.data_dir = PathBuf::from(v);
        }
        if let Some(v) = get("GOS_SESSION_TTL_SECS") {
            self.session_ttl_secs = v.parse().map_err(|_| ConfigError::Env {
                var: "GOS_SESSION_TTL_SECS",
                value: v,
            })?;
        }
        Ok(())
    }

    pub fn addr(&self) -> String {
        format!("{}:{}", self.bind, self.port)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_env() {
        let mut c = ServiceConfig::from_toml_str("port = 9000\nsession_ttl_secs = 5\n").unwrap();
        assert_eq!(c.port, 9000);
        c.apply_env(|k| (k == "GOS_PORT").then(|| "9100".to_string()))
            .unwrap();
        assert_eq!(c.port, 9100);
        assert_eq!(c.session_ttl_secs, 5);
        assert!(c
            .apply_env(|k| (k == "GOS_SESSION_TTL_SECS").then(|| "soon".to_string()))
            .is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ServiceConfig::from_toml_str("prot = 1").is_err());
    }
}
