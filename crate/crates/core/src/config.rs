use serde::{Deserialize, Serialize};

use crate::types::Cents;

/// Exchange-wide defaults. Keys match the config file and, upper-cased with
/// a `TOXMARKET_` prefix, the environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExchangeConfig {
    /// Liquidity parameter for new markets, in euro.
    pub default_b: f64,
    /// Max cumulative spend per account per market.
    pub wager_cap_cents: Cents,
    /// Scrip credited to a newly opened account.
    pub starting_balance_cents: Cents,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        Self {
            default_b: 100.0,
            wager_cap_cents: Cents(100_000),
            starting_balance_cents: Cents(1_000_000),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("environment variable {key}: cannot parse `{value}`")]
    Env { key: String, value: String },
    #[error("invalid value for {key}: {reason}")]
    Invalid { key: &'static str, reason: String },
}

impl ExchangeConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `TOXMARKET_DEFAULT_B`, `TOXMARKET_WAGER_CAP_CENTS` and
    /// `TOXMARKET_STARTING_BALANCE_CENTS` from `lookup`.
    pub fn with_env<F>(mut self, lookup: F) -> Result<Self, ConfigError>
    where
        F: Fn(&str) -> Option<String>,
    {
        fn parse<T: std::str::FromStr>(key: &str, value: String) -> Result<T, ConfigError> {
            value.trim().parse().map_err(|_| ConfigError::Env {
                key: key.to_owned(),
                value,
            })
        }
        if let Some(v) = lookup("TOXMARKET_DEFAULT_B") {
            self.default_b = parse("TOXMARKET_DEFAULT_B", v)?;
        }
        if let Some(v) = lookup("TOXMARKET_WAGER_CAP_CENTS") {
            self.wager_cap_cents = Cents(parse("TOXMARKET_WAGER_CAP_CENTS", v)?);
        }
        if let Some(v) = lookup("TOXMARKET_STARTING_BALANCE_CENTS") {
            self.starting_balance_cents = Cents(parse("TOXMARKET_STARTING_BALANCE_CENTS", v)?);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.default_b.is_finite() && self.default_b > 0.0) {
            return Err(ConfigError::Invalid {
                key: "default_b",
                reason: format!("must be positive, got {}", self.default_b),
            });
        }
        if self.wager_cap_cents.0 < 0 {
            return Err(ConfigError::Invalid {
                key: "wager_cap_cents",
                reason: "must not be negative".into(),
            });
        }
        if self.starting_balance_cents.0 < 0 {
            return Err(ConfigError::Invalid {
                key: "starting_balance_cents",
                reason: "must not be negative".into(),
            });
        }
        Ok(())
    }
}
