use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::types::{AccountId, Cents, MarketId, Timestamp, TradeId, TradeOutcome};

pub const TRADE_LOG_HEADER: [&str; 7] = [
    "trade_id",
    "account_id",
    "market_id",
    "outcome",
    "shares",
    "cost_cents",
    "timestamp",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub trade_id: TradeId,
    pub account_id: AccountId,
    pub market_id: MarketId,
    pub outcome: TradeOutcome,
    pub shares: f64,
    /// Debited amount: the maker quote for `shares`, rounded up to the cent.
    pub cost: Cents,
    /// Unrounded maker quote in euro.
    pub quoted_cost: f64,
    pub timestamp: Timestamp,
    pub prices_after: Vec<f64>,
}

/// A fully validated trade that has not touched any state yet.
///
/// Produced by [`Exchange::plan_trade`](super::Exchange::plan_trade) and
/// applied by [`Exchange::commit_trade`](super::Exchange::commit_trade).
/// Dropping a plan leaves the exchange untouched.
#[derive(Clone, Debug, PartialEq)]
pub struct TradePlan {
    pub account_id: AccountId,
    pub market_id: MarketId,
    pub outcome: TradeOutcome,
    pub spend: Cents,
    pub shares: f64,
    pub quoted_cost: f64,
    pub timestamp: Timestamp,
    pub prices_after: Vec<f64>,
    pub(crate) market_version: u64,
}

pub fn write_trade_log<'a, W, I>(out: W, trades: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Trade>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRADE_LOG_HEADER)?;
    for t in trades {
        w.write_record([
            t.trade_id.as_str(),
            t.account_id.as_str(),
            t.market_id.as_str(),
            t.outcome.as_str(),
            &t.shares.to_string(),
            &t.cost.0.to_string(),
            &t.timestamp.0.to_string(),
        ])?;
    }
    w.flush()
}
