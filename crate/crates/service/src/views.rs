//! JSON shapes returned by the HTTP API.

use serde::{Deserialize, Serialize};
use toxmarket_core::combinatorial::{DependencyReport, JointMarket, DEFAULT_LIFT_EPSILON};
use toxmarket_core::exchange::{Account, LedgerEntry, Market, MarketState, Trade};
use toxmarket_core::settlement::{detect_arbitrage, ArbitrageViolation, ImpliedCurve, Resolution};
use toxmarket_core::types::JointOutcome;
use toxmarket_core::{AccountId, AssetId, Cents, Exchange, MarketId, Outcome, Timestamp};

/// Tolerance used when the curve endpoint flags ladder inversions.
pub const CURVE_ARBITRAGE_EPSILON: f64 = 0.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryPrices {
    #[serde(rename = "HIGHER")]
    pub higher: f64,
    #[serde(rename = "LOWER")]
    pub lower: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketView {
    pub market_id: MarketId,
    pub asset_id: AssetId,
    pub asset_title: String,
    pub county: String,
    pub threshold_cents: i64,
    pub prices: BinaryPrices,
    pub state: MarketState,
    pub cutoff: Timestamp,
    pub b: f64,
    pub version: u64,
    pub resolution: Option<Resolution>,
}

impl MarketView {
    pub fn of(ex: &Exchange, m: &Market) -> Self {
        let asset = ex.registry().get(&m.asset_id);
        Self {
            market_id: m.market_id.clone(),
            asset_id: m.asset_id.clone(),
            asset_title: asset.map(|a| a.title.clone()).unwrap_or_default(),
            county: asset.map(|a| a.county.clone()).unwrap_or_default(),
            threshold_cents: m.threshold.0,
            prices: BinaryPrices {
                higher: m.price(Outcome::Higher),
                lower: m.price(Outcome::Lower),
            },
            state: m.state,
            cutoff: m.cutoff,
            b: m.b(),
            version: m.version,
            resolution: ex.resolution(&m.market_id).cloned(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointView {
    pub joint_id: MarketId,
    pub event_a: MarketId,
    pub event_b: MarketId,
    /// Prices in HH, HL, LH, LL order.
    pub cells: Vec<JointOutcome>,
    pub prices: Vec<f64>,
    pub state: MarketState,
    pub cutoff: Timestamp,
    pub dependency: DependencyReport,
}

impl JointView {
    pub fn of(j: &JointMarket) -> Self {
        Self {
            joint_id: j.joint_id.clone(),
            event_a: j.event_a.clone(),
            event_b: j.event_b.clone(),
            cells: JointOutcome::ALL.to_vec(),
            prices: j.prices().to_vec(),
            state: j.state,
            cutoff: j.cutoff,
            dependency: j.dependency_report(DEFAULT_LIFT_EPSILON),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionView {
    pub market_id: MarketId,
    /// Shares per outcome, in the market's outcome order.
    pub shares: Vec<f64>,
    pub wagered_cents: i64,
    pub remaining_cents: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoutView {
    pub market_id: MarketId,
    pub amount_cents: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccountView {
    pub account_id: AccountId,
    pub balance_cents: i64,
    pub wager_cap_cents: i64,
    pub adult_attested: bool,
    pub positions: Vec<PositionView>,
    pub payouts: Vec<PayoutView>,
}

impl AccountView {
    pub fn of(ex: &Exchange, a: &Account) -> Self {
        let cap = ex.config().wager_cap_cents;
        let positions = a
            .positions
            .iter()
            .map(|(m, shares)| PositionView {
                market_id: m.clone(),
                shares: shares.clone(),
                wagered_cents: a.wagered_in(m).0,
                remaining_cents: a.remaining_allowance(m, cap).0,
            })
            .collect();
        let payouts = ex
            .ledger()
            .iter()
            .filter_map(|e| match e {
                LedgerEntry::Payout {
                    account_id,
                    market_id,
                    amount,
                } if account_id == &a.account_id => Some(PayoutView {
                    market_id: market_id.clone(),
                    amount_cents: amount.0,
                }),
                _ => None,
            })
            .collect();
        Self {
            account_id: a.account_id.clone(),
            balance_cents: a.balance.0,
            wager_cap_cents: cap.0,
            adult_attested: a.adult_attested,
            positions,
            payouts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeResponse {
    pub trade: Trade,
    pub balance_cents: i64,
    pub remaining_cents: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuoteView {
    pub market_id: MarketId,
    pub spend_cents: i64,
    pub shares: f64,
    pub prices_before: Vec<f64>,
    pub prices_after: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveView {
    pub curve: ImpliedCurve,
    pub median_crossing_cents: Option<i64>,
    pub violations: Vec<ArbitrageViolation>,
}

impl CurveView {
    pub fn of(curve: ImpliedCurve) -> Self {
        Self {
            median_crossing_cents: curve.median_crossing().map(|c: Cents| c.0),
            violations: detect_arbitrage(&curve, CURVE_ARBITRAGE_EPSILON),
            curve,
        }
    }
}
