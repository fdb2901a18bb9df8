use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use decorator_engine::{ParseMode, Registry, RegistryError};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("upstream_url must be an absolute http(s) URL, got `{0}`")]
    InvalidUpstream(String),
    #[error("listen must be a socket address such as 127.0.0.1:8080, got `{0}`")]
    InvalidListen(String),
    #[error("credential_env must not be empty when set")]
    EmptyCredentialEnv,
    #[error("extension {path}: {source}")]
    Extension {
        path: PathBuf,
        source: RegistryError,
    },
}

/// Where the compiled directive block goes in the forwarded request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionPosition {
    #[default]
    SystemMessage,
    UserPrefix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    pub upstream_url: String,
    /// Name of the environment variable holding the upstream API key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential_env: Option<String>,
    #[serde(default)]
    pub parse_mode: ParseMode,
    #[serde(default)]
    pub injection: InjectionPosition,
    #[serde(default = "default_true")]
    pub sanitizer: bool,
    /// Directory for session files; sessions are memory-only when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_store: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_log: Option<PathBuf>,
    #[serde(default)]
    pub extensions: Vec<PathBuf>,
}

fn default_listen() -> String {
    "127.0.0.1:8787".to_string()
}

fn default_true() -> bool {
    true
}

impl GatewayConfig {
    pub fn new(upstream_url: impl Into<String>) -> Self {
        Self {
            listen: default_listen(),
            upstream_url: upstream_url.into(),
            credential_env: None,
            parse_mode: ParseMode::Strict,
            injection: InjectionPosition::SystemMessage,
            sanitizer: true,
            session_store: None,
            audit_log: None,
            extensions: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.upstream()?;
        self.listen_addr()?;
        if matches!(&self.credential_env, Some(name) if name.trim().is_empty()) {
            return Err(ConfigError::EmptyCredentialEnv);
        }
        Ok(())
    }

    pub fn upstream(&self) -> Result<Url, ConfigError> {
        let url = Url::parse(&self.upstream_url)
            .map_err(|_| ConfigError::InvalidUpstream(self.upstream_url.clone()))?;
        if !matches!(url.scheme(), "http" | "https") || url.host().is_none() {
            return Err(ConfigError::InvalidUpstream(self.upstream_url.clone()));
        }
        Ok(url)
    }

    /// The chat-completions endpoint under the upstream base URL.
    pub fn completions_url(&self) -> Result<Url, ConfigError> {
        let base = self.upstream()?;
        let joined = format!("{}/chat/completions", base.as_str().trim_end_matches('/'));
        Url::parse(&joined).map_err(|_| ConfigError::InvalidUpstream(self.upstream_url.clone()))
    }

    pub fn listen_addr(&self) -> Result<SocketAddr, ConfigError> {
        self.listen
            .parse()
            .map_err(|_| ConfigError::InvalidListen(self.listen.clone()))
    }

    /// Built-in catalog plus every configured extension file.
    pub fn registry(&self) -> Result<Registry, ConfigError> {
        let mut registry = Registry::builtin();
        for path in &self.extensions {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            registry
                .load_extensions(&text)
                .map_err(|source| ConfigError::Extension {
                    path: path.clone(),
                    source,
                })?;
        }
        Ok(registry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c =
            GatewayConfig::from_json(r#"{"upstream_url": "https://api.example.com/v1"}"#).unwrap();
        assert_eq!(c.injection, InjectionPosition::SystemMessage);
        assert_eq!(c.parse_mode, ParseMode::Strict);
        assert!(c.sanitizer);
        assert_eq!(
            c.completions_url().unwrap().as_str(),
            "https://api.example.com/v1/chat/completions"
        );
    }

    #[test]
    fn full_config() {
        let c = GatewayConfig::from_json(
            r#"{"listen": "0.0.0.0:9000", "upstream_url": "http://localhost:1234/v1/",
                "credential_env": "OPENAI_API_KEY", "parse_mode": "lenient",
                "injection": "user-prefix", "sanitizer": false,
                "session_store": "/tmp/s", "audit_log": "/tmp/a.jsonl", "extensions": []}"#,
        )
        .unwrap();
        assert_eq!(c.injection, InjectionPosition::UserPrefix);
        assert_eq!(c.parse_mode, ParseMode::Lenient);
        assert_eq!(
            c.completions_url().unwrap().as_str(),
            "http://localhost:1234/v1/chat/completions"
        );
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            r#"{"upstream_url": "api.example.com"}"#,
            r#"{"upstream_url": "/v1"}"#,
            r#"{"upstream_url": "ftp://example.com"}"#,
            r#"{"upstream_url": "http://x", "listen": "nope"}"#,
            r#"{"upstream_url": "http://x", "credential_env": " "}"#,
            r#"{"upstream_url": "http://x", "injection": "footer"}"#,
            r#"{"upstream_url": "http://x", "unknown": 1}"#,
            r#"{}"#,
        ] {
            assert!(GatewayConfig::from_json(bad).is_err(), "{bad}");
        }
    }
}
