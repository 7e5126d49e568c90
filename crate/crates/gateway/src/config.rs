//! Gateway configuration: a flat `key = value` file, overridden by
//! `CXRGW_*` environment variables, overridden by explicit flags.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use cxr_core::ood;
use thiserror::Error;

pub const ENV_PREFIX: &str = "CXRGW_";

pub const KEYS: [&str; 8] = [
    "listen",
    "model.classifier",
    "model.ood",
    "ood.threshold",
    "storage.dir",
    "limits.max_request_bytes",
    "limits.max_in_flight",
    "auth.token",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("missing required key {0:?}")]
    Missing(&'static str),
    #[error("invalid value for {key}: {value:?}")]
    Invalid { key: &'static str, value: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatewayConfig {
    pub listen: SocketAddr,
    pub classifier_model: PathBuf,
    pub ood_model: PathBuf,
    pub ood_threshold: f64,
    pub storage_dir: PathBuf,
    pub max_request_bytes: usize,
    pub max_in_flight: usize,
    pub auth_token: Option<String>,
}

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8042";
pub const DEFAULT_STORAGE_DIR: &str = "store";
pub const DEFAULT_MAX_REQUEST_BYTES: usize = 64 * 1024 * 1024;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 16;

/// Environment variable for a key: `ood.threshold` -> `CXRGW_OOD_THRESHOLD`.
pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "_").to_ascii_uppercase())
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// Layered sources, lowest precedence first.
#[derive(Debug, Default, Clone)]
pub struct ConfigSources {
    pub file: BTreeMap<String, String>,
    pub env: BTreeMap<String, String>,
    pub flags: BTreeMap<String, String>,
}

impl ConfigSources {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut file = parse_file(&text)?;
        // relative paths in a config file are relative to that file
        let base = path.parent().unwrap_or(Path::new(""));
        for key in ["model.classifier", "model.ood", "storage.dir"] {
            if let Some(v) = file.get_mut(key) {
                if Path::new(v.as_str()).is_relative() {
                    *v = base.join(v.as_str()).to_string_lossy().into_owned();
                }
            }
        }
        Ok(ConfigSources { file, ..Default::default() })
    }

    /// Picks up `CXRGW_*` variables for known keys.
    pub fn with_env(mut self, vars: impl IntoIterator<Item = (String, String)>) -> Self {
        let vars: BTreeMap<String, String> = vars.into_iter().collect();
        for key in KEYS {
            if let Some(v) = vars.get(&env_name(key)) {
                self.env.insert(key.to_string(), v.clone());
            }
        }
        self
    }

    pub fn with_flag(mut self, key: &str, value: impl Into<String>) -> Self {
        self.flags.insert(key.to_string(), value.into());
        self
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.flags
            .get(key)
            .or_else(|| self.env.get(key))
            .or_else(|| self.file.get(key))
            .map(String::as_str)
    }

    pub fn resolve(&self) -> Result<GatewayConfig, ConfigError> {
        for key in self.flags.keys().chain(self.env.keys()) {
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }
        fn parse<T: std::str::FromStr>(key: &'static str, raw: &str) -> Result<T, ConfigError> {
            raw.parse().map_err(|_| ConfigError::Invalid { key, value: raw.to_string() })
        }
        let required = |key: &'static str| self.get(key).filter(|v| !v.is_empty()).ok_or(ConfigError::Missing(key));

        let threshold: f64 = match self.get("ood.threshold") {
            Some(v) => parse("ood.threshold", v)?,
            None => ood::DEFAULT_THRESHOLD,
        };
        if ood::check_threshold(threshold).is_err() {
            return Err(ConfigError::Invalid { key: "ood.threshold", value: threshold.to_string() });
        }
        let max_request_bytes = match self.get("limits.max_request_bytes") {
            Some(v) => parse("limits.max_request_bytes", v)?,
            None => DEFAULT_MAX_REQUEST_BYTES,
        };
        let max_in_flight: usize = match self.get("limits.max_in_flight") {
            Some(v) => parse("limits.max_in_flight", v)?,
            None => DEFAULT_MAX_IN_FLIGHT,
        };
        if max_in_flight == 0 {
            return Err(ConfigError::Invalid { key: "limits.max_in_flight", value: "0".into() });
        }
        Ok(GatewayConfig {
            listen: parse("listen", self.get("listen").unwrap_or(DEFAULT_LISTEN))?,
            classifier_model: required("model.classifier")?.into(),
            ood_model: required("model.ood")?.into(),
            ood_threshold: threshold,
            storage_dir: self.get("storage.dir").unwrap_or(DEFAULT_STORAGE_DIR).into(),
            max_request_bytes,
            max_in_flight,
            auth_token: self.get("auth.token").filter(|t| !t.is_empty()).map(String::from),
        })
    }
}
