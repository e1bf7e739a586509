use serde::{Deserialize, Serialize};
use toxmarket_core::{AccountId, Timestamp};

/// Bearer token bound to one account, valid on `[issued_at, expires_at)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSession {
    pub token: String,
    pub account_id: AccountId,
    pub issued_at: Timestamp,
    pub expires_at: Timestamp,
}

impl ApiSession {
    pub fn issue(account_id: AccountId, now: Timestamp, ttl_secs: i64) -> Self {
        Self {
            token: uuid::Uuid::new_v4().simple().to_string(),
            account_id,
            issued_at: now,
            expires_at: Timestamp(now.0.saturating_add(ttl_secs)),
        }
    }

    pub fn is_live(&self, now: Timestamp) -> bool {
        self.issued_at <= now && now < self.expires_at
    }
}
