use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{AccountId, Cents, MarketId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Account {
    pub account_id: AccountId,
    pub balance: Cents,
    /// Shares held per market, indexed by outcome.
    pub positions: BTreeMap<MarketId, Vec<f64>>,
    /// Cumulative scrip spent per market.
    pub wagered: BTreeMap<MarketId, Cents>,
    /// Operator attestation that the participant is of age.
    pub adult_attested: bool,
}

impl Account {
    pub fn new(account_id: AccountId, adult_attested: bool) -> Self {
        Self {
            account_id,
            balance: Cents::ZERO,
            positions: BTreeMap::new(),
            wagered: BTreeMap::new(),
            adult_attested,
        }
    }

    pub fn wagered_in(&self, market: &MarketId) -> Cents {
        self.wagered.get(market).copied().unwrap_or_default()
    }

    pub fn position(&self, market: &MarketId, outcome: usize) -> f64 {
        self.positions
            .get(market)
            .and_then(|p| p.get(outcome))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn remaining_allowance(&self, market: &MarketId, cap: Cents) -> Cents {
        Cents((cap - self.wagered_in(market)).0.max(0))
    }
}
