use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use askwell_core::llm::GatewayConfig;
use askwell_core::nl2sql::SandboxConfig;
use serde::Deserialize;

use crate::ServerError;

pub const DEFAULT_TOKEN_ENV: &str = "ASKWELL_API_TOKENS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Mock,
    Live,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    pub seed: u64,
    /// Wall-clock budget per job before it is failed.
    pub deadline_secs: u64,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            seed: 20250101,
            deadline_secs: 120,
        }
    }
}

/// Server settings. Bearer tokens are never read from this file: the file
/// names the environment variable that holds them.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    pub store_path: PathBuf,
    /// Environment variable holding comma-separated bearer tokens.
    pub token_env: String,
    pub backend: BackendChoice,
    /// Mock fixture directory; the bundled fixtures are used when unset.
    pub mock_fixture_dir: Option<PathBuf>,
    /// Database id → SQLite file.
    pub databases: BTreeMap<String, PathBuf>,
    /// Every `*.sqlite`/`*.db` file here is registered under its stem.
    pub database_dir: Option<PathBuf>,
    pub max_running_jobs_per_session: usize,
    pub gateway: GatewayConfig,
    pub sandbox: SandboxConfig,
    pub pipeline: PipelineSettings,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            store_path: PathBuf::from("askwell-state.sqlite"),
            token_env: DEFAULT_TOKEN_ENV.into(),
            backend: BackendChoice::Mock,
            mock_fixture_dir: None,
            databases: BTreeMap::new(),
            database_dir: None,
            max_running_jobs_per_session: 1,
            gateway: GatewayConfig::default(),
            sandbox: SandboxConfig::default(),
            pipeline: PipelineSettings::default(),
        }
    }
}

impl ServerConfig {
    pub fn parse(text: &str) -> Result<Self, ServerError> {
        toml::from_str(text).map_err(|e| ServerError::Config(e.to_string()))
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ServerError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServerError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.store_path);
        cfg.databases.values_mut().for_each(resolve);
        if let Some(p) = cfg.database_dir.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.mock_fixture_dir.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    /// Tokens from the configured environment variable.
    pub fn tokens_from_env(&self) -> Result<HashSet<String>, ServerError> {
        let raw = std::env::var(&self.token_env)
            .map_err(|_| ServerError::Config(format!("environment variable {} is not set", self.token_env)))?;
        let tokens = parse_tokens(&raw);
        if tokens.is_empty() {
            return Err(ServerError::Config(format!("{} holds no tokens", self.token_env)));
        }
        Ok(tokens)
    }
}

pub fn parse_tokens(raw: &str) -> HashSet<String> {
    raw.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}
