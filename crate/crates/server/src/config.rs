//! Server configuration from `PB_*` environment variables.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use jsonwebtoken::jwk::JwkSet;
use proofbench_core::Locale;
use proofbench_gateway::PoolConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{var}: {message}")]
    Invalid { var: &'static str, message: String },
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProverMode {
    /// In-process mock answering from fixtures, structural otherwise.
    Fixture,
    /// In-process mock with structural checks only.
    Structural,
    /// One `pb-mock-prover` child process per instance.
    External,
}

impl std::str::FromStr for ProverMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixture" => Ok(ProverMode::Fixture),
            "structural" => Ok(ProverMode::Structural),
            "external" => Ok(ProverMode::External),
            other => Err(format!("expected fixture, structural or external, got `{other}`")),
        }
    }
}

/// A trusted token issuer and its verification keys.
#[derive(Debug, Clone)]
pub struct IssuerConfig {
    pub issuer: String,
    pub jwks: JwkSet,
    /// Claim holding the role list.
    pub roles_claim: String,
}

impl IssuerConfig {
    pub fn from_jwks_file(issuer: &str, path: &std::path::Path) -> Result<Self, ConfigError> {
        let file_err = |message: String| ConfigError::File { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        let jwks: JwkSet = serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))?;
        Ok(IssuerConfig { issuer: issuer.into(), jwks, roles_claim: "roles".into() })
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub listen_addr: SocketAddr,
    pub issuers: Vec<IssuerConfig>,
    pub pool: PoolConfig,
    pub prover_mode: ProverMode,
    /// SQLite history lives here; in-memory when unset.
    pub data_dir: Option<PathBuf>,
    pub locale_default: Locale,
    pub tutorials_dir: PathBuf,
    /// Fixture file or directory for fixture mode.
    pub fixtures: Option<PathBuf>,
    /// `pb-mock-prover` binary for external mode.
    pub mock_binary: Option<PathBuf>,
    /// Prover sessions idle this long are released.
    pub session_idle: Duration,
    /// Tasks after the first failed task are left unchecked.
    pub block_after_failure: bool,
    pub record_identical: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            listen_addr: ([127, 0, 0, 1], 8080).into(),
            issuers: Vec::new(),
            pool: PoolConfig::default(),
            prover_mode: ProverMode::Fixture,
            data_dir: None,
            locale_default: Locale::En,
            tutorials_dir: PathBuf::from("tutorials"),
            fixtures: None,
            mock_binary: None,
            session_idle: Duration::from_secs(600),
            block_after_failure: false,
            record_identical: false,
        }
    }
}

impl Config {
    pub fn from_env() -> Result<Config, ConfigError> {
        Config::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Config, ConfigError> {
        fn parse<T: std::str::FromStr>(var: &'static str, value: String) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            value.trim().parse().map_err(|e: T::Err| ConfigError::Invalid { var, message: e.to_string() })
        }

        let mut c = Config::default();
        if let Some(v) = get("PB_LISTEN_ADDR") {
            c.listen_addr = parse("PB_LISTEN_ADDR", v)?;
        }
        if let Some(v) = get("PB_POOL_INITIAL") {
            c.pool.initial = parse("PB_POOL_INITIAL", v)?;
        }
        if let Some(v) = get("PB_POOL_MAX") {
            c.pool.max = parse("PB_POOL_MAX", v)?;
        }
        if let Some(v) = get("PB_SESSION_CAP") {
            c.pool.session_cap = parse("PB_SESSION_CAP", v)?;
        }
        if let Some(v) = get("PB_CHECK_TIMEOUT_SECS") {
            c.pool.check_timeout = Duration::from_secs(parse("PB_CHECK_TIMEOUT_SECS", v)?);
        }
        if let Some(v) = get("PB_PROVER_MODE") {
            c.prover_mode = parse("PB_PROVER_MODE", v)?;
        }
        c.data_dir = get("PB_DATA_DIR").map(PathBuf::from);
        if let Some(v) = get("PB_LOCALE_DEFAULT") {
            c.locale_default = parse("PB_LOCALE_DEFAULT", v)?;
        }
        if let Some(v) = get("PB_TUTORIALS_DIR") {
            c.tutorials_dir = PathBuf::from(v);
        }
        c.fixtures = get("PB_FIXTURES").map(PathBuf::from);
        c.mock_binary = get("PB_MOCK_PROVER").map(PathBuf::from);
        if let Some(v) = get("PB_SESSION_IDLE_SECS") {
            c.session_idle = Duration::from_secs(parse("PB_SESSION_IDLE_SECS", v)?);
        }
        if let Some(v) = get("PB_BLOCK_AFTER_FAILURE") {
            c.block_after_failure = parse("PB_BLOCK_AFTER_FAILURE", v)?;
        }
        if let Some(v) = get("PB_RECORD_IDENTICAL") {
            c.record_identical = parse("PB_RECORD_IDENTICAL", v)?;
        }
        match (get("PB_ISSUER_URL"), get("PB_ISSUER_JWKS")) {
            (Some(issuer), Some(path)) => {
                let mut issuer = IssuerConfig::from_jwks_file(&issuer, std::path::Path::new(&path))?;
                if let Some(claim) = get("PB_ROLES_CLAIM") {
                    issuer.roles_claim = claim;
                }
                c.issuers.push(issuer);
            }
            (Some(_), None) => {
                return Err(ConfigError::Invalid {
                    var: "PB_ISSUER_JWKS",
                    message: "required with PB_ISSUER_URL".into(),
                })
            }
            (None, Some(_)) => {
                return Err(ConfigError::Invalid {
                    var: "PB_ISSUER_URL",
                    message: "required with PB_ISSUER_JWKS".into(),
                })
            }
            (None, None) => {}
        }
        c.pool.validate().map_err(|e| ConfigError::Invalid { var: "PB_POOL_INITIAL", message: e.to_string() })?;
        Ok(c)
    }

    pub fn fixture_path(&self) -> PathBuf {
        self.fixtures.clone().unwrap_or_else(|| self.tutorials_dir.join("fixtures"))
    }
}
