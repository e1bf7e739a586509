use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toxmarket_core::ExchangeConfig;

#[derive(Debug, thiserror::Error)]
pub enum ServiceConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid service config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    pub journal_path: PathBuf,
    /// Bearer token for /admin endpoints and account provisioning.
    pub admin_token: String,
    pub session_ttl_secs: i64,
    /// fsync the journal after every append.
    pub fsync: bool,
    /// Document served at /docs/guidelines; a built-in placeholder if unset.
    pub guidelines_path: Option<PathBuf>,
    pub exchange: ExchangeConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            journal_path: PathBuf::from("toxmarket.journal"),
            admin_token: String::new(),
            session_ttl_secs: 86_400,
            fsync: true,
            guidelines_path: None,
            exchange: ExchangeConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceConfigError> {
        toml::from_str(text).map_err(|e| ServiceConfigError::Invalid(e.to_string()))
    }

    /// Reads `path` (or defaults), then applies environment overrides:
    /// `TOXMARKET_ADMIN_TOKEN`, `TOXMARKET_PORT`, `TOXMARKET_JOURNAL` and the
    /// exchange keys.
    pub fn load(path: Option<&std::path::Path>) -> Result<Self, ServiceConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ServiceConfigError::Read {
                    path: p.to_owned(),
                    source,
                })?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env<F>(&mut self, lookup: F) -> Result<(), ServiceConfigError>
    where
        F: Fn(&str) -> Option<String>,
    {
        if let Some(v) = lookup("TOXMARKET_ADMIN_TOKEN") {
            self.admin_token = v;
        }
        if let Some(v) = lookup("TOXMARKET_PORT") {
            self.port = v
                .parse()
                .map_err(|_| ServiceConfigError::Invalid(format!("TOXMARKET_PORT: `{v}` is not a port")))?;
        }
        if let Some(v) = lookup("TOXMARKET_JOURNAL") {
            self.journal_path = PathBuf::from(v);
        }
        self.exchange = self
            .exchange
            .clone()
            .with_env(&lookup)
            .map_err(|e| ServiceConfigError::Invalid(e.to_string()))?;
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ServiceConfigError> {
        if self.session_ttl_secs <= 0 {
            return Err(ServiceConfigError::Invalid("session_ttl_secs must be positive".into()));
        }
        self.exchange
            .validate()
            .map_err(|e| ServiceConfigError::Invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use toxmarket_core::Cents;

    #[test]
    fn toml_and_env() {
        let mut cfg = ServiceConfig::from_toml(
            "port = 9000\nadmin_token = \"a\"\n[exchange]\nwager_cap_cents = 5000\n",
        )
        .unwrap();
        assert_eq!(cfg.port, 9000);
        assert_eq!(cfg.exchange.wager_cap_cents, Cents(5000));
        assert_eq!(cfg.exchange.default_b, 100.0);
        cfg.apply_env(|k| match k {
            "TOXMARKET_PORT" => Some("9100".into()),
            "TOXMARKET_DEFAULT_B" => Some("50".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.port, 9100);
        assert_eq!(cfg.exchange.default_b, 50.0);
        assert!(cfg
            .clone()
            .apply_env(|k| (k == "TOXMARKET_PORT").then(|| "x".into()))
            .is_err());
        assert!(ServiceConfig::from_toml("nope = 1").is_err());
    }
}
