use serde::{Deserialize, Serialize};

use crate::lmsr::LmsrBook;
use crate::types::{AssetId, Cents, MarketId, Outcome, Timestamp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MarketState {
    Open,
    Halted,
    Settled,
}

impl MarketState {
    /// Legal forward transitions: OPEN -> HALTED -> SETTLED.
    pub fn can_become(self, next: MarketState) -> bool {
        matches!(
            (self, next),
            (MarketState::Open, MarketState::Halted) | (MarketState::Halted, MarketState::Settled)
        )
    }
}

/// Binary security on whether an asset's transfer price exceeds `threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Market {
    pub market_id: MarketId,
    pub asset_id: AssetId,
    pub threshold: Cents,
    pub book: LmsrBook,
    pub state: MarketState,
    pub cutoff: Timestamp,
    /// Bumped on every trade; plans taken against an older version are stale.
    pub version: u64,
}

impl Market {
    pub fn prices(&self) -> [f64; 2] {
        let p = self.book.prices();
        [p[0], p[1]]
    }

    pub fn price(&self, outcome: Outcome) -> f64 {
        self.prices()[outcome.index()]
    }

    pub fn b(&self) -> f64 {
        self.book.b()
    }

    /// HIGHER wins iff the announced price is strictly above the threshold.
    pub fn winner_for(&self, announced: Cents) -> Outcome {
        if announced > self.threshold {
            Outcome::Higher
        } else {
            Outcome::Lower
        }
    }
}
