//! Engine configuration: a `key = value` text file.
//!
//! ```text
//! kb_path = kb.txt
//! ontology_path = ontology.txt
//! role_policy_path = roles.txt
//! session_ttl_seconds = 3600
//! listen_address = 127.0.0.1:8470
//! audit_export_path = audit.tsv
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use chrono::Duration;
use thiserror::Error;
use triplegate::{
    parse_kb, parse_ontology, parse_role_policy, AuditLog, Clock, Engine, FormatError, Ontology,
    OntologyLoadError, RolePolicies, Triple,
};

pub const DEFAULT_LISTEN_ADDRESS: &str = "127.0.0.1:8470";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{path}: {source}")]
    Ontology {
        path: PathBuf,
        source: OntologyLoadError,
    },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config is missing `{0}`")]
    Missing(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub kb_path: PathBuf,
    pub ontology_path: PathBuf,
    pub role_policy_path: PathBuf,
    pub session_ttl_seconds: u64,
    pub listen_address: String,
    pub audit_export_path: Option<PathBuf>,
}

impl EngineConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut kb = None;
        let mut ontology = None;
        let mut roles = None;
        let mut ttl = triplegate::session::DEFAULT_TTL_SECONDS as u64;
        let mut listen = DEFAULT_LISTEN_ADDRESS.to_string();
        let mut audit = None;
        for (i, line) in text.lines().enumerate() {
            let syntax = |message: String| ConfigError::Syntax {
                line: i + 1,
                message,
            };
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected `key = value`".to_string()))?;
            let value = value.trim();
            if value.is_empty() {
                return Err(syntax(format!("`{}` has no value", key.trim())));
            }
            let path = || base_dir.join(value);
            match key.trim() {
                "kb_path" => kb = Some(path()),
                "ontology_path" => ontology = Some(path()),
                "role_policy_path" => roles = Some(path()),
                "session_ttl_seconds" => {
                    ttl = value
                        .parse()
                        .ok()
                        .filter(|t| *t > 0)
                        .ok_or_else(|| syntax(format!("`{value}` is not a positive integer")))?
                }
                "listen_address" => listen = value.to_string(),
                "audit_export_path" => audit = Some(path()),
                other => return Err(syntax(format!("unknown key `{other}`"))),
            }
        }
        Ok(Self {
            kb_path: kb.ok_or(ConfigError::Missing("kb_path"))?,
            ontology_path: ontology.ok_or(ConfigError::Missing("ontology_path"))?,
            role_policy_path: roles.ok_or(ConfigError::Missing("role_policy_path"))?,
            session_ttl_seconds: ttl,
            listen_address: listen,
            audit_export_path: audit,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = read(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn ttl(&self) -> Duration {
        Duration::seconds(self.session_ttl_seconds.min(i64::MAX as u64 / 1000) as i64)
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Everything the config points at, parsed.
#[derive(Debug, Clone)]
pub struct LoadedInputs {
    pub kb: Vec<Triple>,
    pub ontology: Ontology,
    pub policies: RolePolicies,
}

impl LoadedInputs {
    pub fn load(config: &EngineConfig) -> Result<Self, ConfigError> {
        let kb = parse_kb(&read(&config.kb_path)?).map_err(|source| ConfigError::Format {
            path: config.kb_path.clone(),
            source,
        })?;
        let ontology = parse_ontology(&read(&config.ontology_path)?).map_err(|source| {
            ConfigError::Ontology {
                path: config.ontology_path.clone(),
                source,
            }
        })?;
        let policies = parse_role_policy(&read(&config.role_policy_path)?).map_err(|source| {
            ConfigError::Format {
                path: config.role_policy_path.clone(),
                source,
            }
        })?;
        Ok(Self {
            kb,
            ontology,
            policies,
        })
    }

    /// Builds a fresh engine. When `clock` is `None` the system clock is used.
    pub fn engine(
        &self,
        config: &EngineConfig,
        clock: Option<std::sync::Arc<dyn Clock>>,
    ) -> Result<Engine, ConfigError> {
        let audit = match &config.audit_export_path {
            Some(path) => {
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|source| ConfigError::Io {
                        path: path.clone(),
                        source,
                    })?;
                AuditLog::with_sink(file)
            }
            None => AuditLog::new(),
        };
        let mut builder = Engine::builder()
            .kb(self.kb.iter().cloned())
            .ontology(self.ontology.clone())
            .policies(self.policies.clone())
            .ttl(config.ttl())
            .audit(audit);
        if let Some(clock) = clock {
            builder = builder.clock(clock);
        }
        Ok(builder.build())
    }
}

/// Loads the config's inputs and builds an engine on the system clock.
pub fn build_engine(config: &EngineConfig) -> Result<Engine, ConfigError> {
    LoadedInputs::load(config)?.engine(config, None)
}
