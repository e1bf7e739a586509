//! Markets, accounts, the scrip ledger and trade execution.
//!
//! Money on the ledger is integer cents. Market-maker arithmetic is done in
//! euro as `f64`; a spend in cents is converted to euro, turned into shares
//! by the maker, and the account is debited exactly the spend.
//!
//! Trades are two-phase: [`Exchange::plan_trade`] validates everything and
//! computes the result against a borrowed exchange, and
//! [`Exchange::commit_trade`] applies it. Nothing can fail between the two
//! except a stale plan, which is detected before any mutation. Callers that
//! must persist a trade before acknowledging it journal the plan in between.

mod account;
mod market;
mod trade;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use account::Account;
pub use market::{Market, MarketState};
pub use trade::{write_trade_log, Trade, TradePlan, TRADE_LOG_HEADER};

use crate::combinatorial::JointMarket;
use crate::config::ExchangeConfig;
use crate::lmsr::{LmsrBook, LmsrError};
use crate::registry::{AssetRegistry, AssetStatus};
use crate::settlement::Resolution;
use crate::types::{AccountId, AssetId, Cents, MarketId, Timestamp, TradeId, TradeOutcome};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExchangeError {
    #[error("unknown asset `{0}`")]
    UnknownAsset(AssetId),
    #[error("unknown market `{0}`")]
    UnknownMarket(MarketId),
    #[error("unknown account `{0}`")]
    UnknownAccount(AccountId),
    #[error("account `{0}` already exists")]
    DuplicateAccount(AccountId),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("asset `{0}` is already settled")]
    AssetSettled(AssetId),
    #[error("market `{market}` is {state:?}, not open for trading")]
    MarketNotOpen { market: MarketId, state: MarketState },
    #[error("market `{market}` passed its cutoff at {cutoff}")]
    PastCutoff { market: MarketId, cutoff: Timestamp },
    #[error("insufficient balance: have {balance}, need {needed}")]
    InsufficientBalance { balance: Cents, needed: Cents },
    #[error("wager cap exceeded: remaining allowance in this market is {remaining}")]
    WagerCapExceeded { remaining: Cents },
    #[error("outcome {outcome} does not belong to market `{market}`")]
    OutcomeMismatch { market: MarketId, outcome: TradeOutcome },
    #[error("market `{market}` must be halted before settlement (is {state:?})")]
    NotHalted { market: MarketId, state: MarketState },
    #[error("market `{0}` is already settled")]
    AlreadySettled(MarketId),
    #[error("joint market needs two distinct base markets")]
    IdenticalEvents,
    #[error("no open or halted markets on asset `{0}`")]
    NoMarkets(AssetId),
    #[error("two markets on asset `{asset}` share threshold {threshold}")]
    DuplicateThreshold { asset: AssetId, threshold: Cents },
    #[error("trade plan is stale: market `{0}` changed since it was planned")]
    StalePlan(MarketId),
    #[error(transparent)]
    Maker(#[from] LmsrError),
}

/// Coarse classification used to map errors onto protocol status codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Invalid,
    NotFound,
    Conflict,
}

impl ExchangeError {
    pub fn class(&self) -> ErrorClass {
        use ExchangeError::*;
        match self {
            UnknownAsset(_) | UnknownMarket(_) | UnknownAccount(_) | NoMarkets(_) => {
                ErrorClass::NotFound
            }
            InvalidArgument(_) | OutcomeMismatch { .. } | IdenticalEvents | Maker(_) => {
                ErrorClass::Invalid
            }
            DuplicateAccount(_)
            | AssetSettled(_)
            | MarketNotOpen { .. }
            | PastCutoff { .. }
            | InsufficientBalance { .. }
            | WagerCapExceeded { .. }
            | NotHalted { .. }
            | AlreadySettled(_)
            | DuplicateThreshold { .. }
            | StalePlan(_) => ErrorClass::Conflict,
        }
    }
}

/// One line of the scrip ledger journal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LedgerEntry {
    Credit {
        account_id: AccountId,
        amount: Cents,
    },
    TradeDebit {
        trade_id: TradeId,
        account_id: AccountId,
        market_id: MarketId,
        amount: Cents,
    },
    Payout {
        account_id: AccountId,
        market_id: MarketId,
        amount: Cents,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub credits_issued: Cents,
    pub maker_take: Cents,
    pub payouts: Cents,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Exchange {
    pub(crate) config: ExchangeConfig,
    pub(crate) registry: AssetRegistry,
    pub(crate) markets: BTreeMap<MarketId, Market>,
    pub(crate) joints: BTreeMap<MarketId, JointMarket>,
    pub(crate) accounts: BTreeMap<AccountId, Account>,
    pub(crate) trades: Vec<Trade>,
    pub(crate) ledger: Vec<LedgerEntry>,
    pub(crate) totals: LedgerTotals,
    pub(crate) resolutions: BTreeMap<MarketId, Resolution>,
    pub(crate) next_market: u64,
    pub(crate) next_joint: u64,
}

impl Default for Exchange {
    fn default() -> Self {
        Self::new(ExchangeConfig::default())
    }
}

impl Exchange {
    pub fn new(config: ExchangeConfig) -> Self {
        Self::with_registry(config, AssetRegistry::new())
    }

    pub fn with_registry(config: ExchangeConfig, registry: AssetRegistry) -> Self {
        Self {
            config,
            registry,
            markets: BTreeMap::new(),
            joints: BTreeMap::new(),
            accounts: BTreeMap::new(),
            trades: Vec::new(),
            ledger: Vec::new(),
            totals: LedgerTotals::default(),
            resolutions: BTreeMap::new(),
            next_market: 1,
            next_joint: 1,
        }
    }

    pub fn config(&self) -> &ExchangeConfig {
        &self.config
    }

    pub fn registry(&self) -> &AssetRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut AssetRegistry {
        &mut self.registry
    }

    pub fn markets(&self) -> impl Iterator<Item = &Market> {
        self.markets.values()
    }

    pub fn market(&self, id: &MarketId) -> Result<&Market, ExchangeError> {
        self.markets
            .get(id)
            .ok_or_else(|| ExchangeError::UnknownMarket(id.clone()))
    }

    pub fn markets_for_asset<'a>(&'a self, asset: &'a AssetId) -> impl Iterator<Item = &'a Market> {
        self.markets.values().filter(move |m| &m.asset_id == asset)
    }

    pub fn account(&self, id: &AccountId) -> Result<&Account, ExchangeError> {
        self.accounts
            .get(id)
            .ok_or_else(|| ExchangeError::UnknownAccount(id.clone()))
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Account> {
        self.accounts.values()
    }

    /// Append-only trade log, in execution order.
    pub fn trades(&self) -> &[Trade] {
        &self.trades
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn totals(&self) -> LedgerTotals {
        self.totals
    }

    pub fn resolution(&self, market: &MarketId) -> Option<&Resolution> {
        self.resolutions.get(market)
    }

    pub fn create_market(
        &mut self,
        asset_id: &AssetId,
        threshold: Cents,
        b: f64,
        cutoff: Timestamp,
        now: Timestamp,
    ) -> Result<&Market, ExchangeError> {
        let asset = self
            .registry
            .get(asset_id)
            .ok_or_else(|| ExchangeError::UnknownAsset(asset_id.clone()))?;
        if asset.status == AssetStatus::Settled {
            return Err(ExchangeError::AssetSettled(asset_id.clone()));
        }
        if !threshold.is_positive() {
            return Err(ExchangeError::InvalidArgument(format!(
                "threshold must be positive, got {} cents",
                threshold.0
            )));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(ExchangeError::InvalidArgument(format!(
                "liquidity b must be positive, got {b}"
            )));
        }
        if cutoff <= now {
            return Err(ExchangeError::InvalidArgument(format!(
                "cutoff {cutoff} is not in the future (now {now})"
            )));
        }
        let book = LmsrBook::new(2, b)?;
        let market_id = MarketId(format!("M{}", self.next_market));
        self.next_market += 1;
        if let Some(asset) = self.registry.get_mut(asset_id) {
            asset.status = AssetStatus::MarketOpen;
        }
        let market = Market {
            market_id: market_id.clone(),
            asset_id: asset_id.clone(),
            threshold,
            book,
            state: MarketState::Open,
            cutoff,
            version: 0,
        };
        Ok(self.markets.entry(market_id).or_insert(market))
    }

    /// Creates an empty account. Starting balances are granted with
    /// [`credit_account`](Self::credit_account).
    pub fn create_account(
        &mut self,
        account_id: AccountId,
        adult_attested: bool,
    ) -> Result<&Account, ExchangeError> {
        if account_id.as_str().trim().is_empty() {
            return Err(ExchangeError::InvalidArgument("empty account id".into()));
        }
        if self.accounts.contains_key(&account_id) {
            return Err(ExchangeError::DuplicateAccount(account_id));
        }
        let acct = Account::new(account_id.clone(), adult_attested);
        Ok(self.accounts.entry(account_id).or_insert(acct))
    }

    /// Creates an account and credits the configured starting balance.
    pub fn open_account(
        &mut self,
        account_id: AccountId,
        adult_attested: bool,
    ) -> Result<&Account, ExchangeError> {
        self.create_account(account_id.clone(), adult_attested)?;
        let start = self.config.starting_balance_cents;
        if start.is_positive() {
            self.credit_account(&account_id, start)?;
        }
        self.account(&account_id)
    }

    pub fn credit_account(&mut self, account_id: &AccountId, amount: Cents) -> Result<Cents, ExchangeError> {
        if !amount.is_positive() {
            return Err(ExchangeError::InvalidArgument(format!(
                "credit must be positive, got {} cents",
                amount.0
            )));
        }
        let acct = self
            .accounts
            .get_mut(account_id)
            .ok_or_else(|| ExchangeError::UnknownAccount(account_id.clone()))?;
        acct.balance += amount;
        self.totals.credits_issued += amount;
        self.ledger.push(LedgerEntry::Credit {
            account_id: account_id.clone(),
            amount,
        });
        Ok(acct.balance)
    }

    /// Read-only view of a base or joint market's maker state.
    pub(crate) fn venue(&self, id: &MarketId) -> Result<Venue<'_>, ExchangeError> {
        if let Some(m) = self.markets.get(id) {
            return Ok(Venue {
                book: &m.book,
                state: m.state,
                cutoff: m.cutoff,
                version: m.version,
                joint: false,
            });
        }
        if let Some(j) = self.joints.get(id) {
            return Ok(Venue {
                book: &j.book,
                state: j.state,
                cutoff: j.cutoff,
                version: j.version,
                joint: true,
            });
        }
        Err(ExchangeError::UnknownMarket(id.clone()))
    }

    /// Shares and post-trade prices for spending `spend` on `outcome`,
    /// without touching accounts.
    pub fn quote_spend(
        &self,
        market_id: &MarketId,
        outcome: TradeOutcome,
        spend: Cents,
    ) -> Result<(f64, Vec<f64>), ExchangeError> {
        let venue = self.venue(market_id)?;
        venue.check_outcome(market_id, outcome)?;
        if venue.state != MarketState::Open {
            return Err(ExchangeError::MarketNotOpen {
                market: market_id.clone(),
                state: venue.state,
            });
        }
        if !spend.is_positive() {
            return Err(ExchangeError::InvalidArgument("spend must be positive".into()));
        }
        let shares = venue.book.shares_for_spend(outcome.index(), spend.to_euro())?;
        let mut after = venue.book.clone();
        after.apply(outcome.index(), shares)?;
        Ok((shares, after.prices()))
    }

    /// Validates a trade and computes its effects without applying them.
    pub fn plan_trade(
        &self,
        account_id: &AccountId,
        market_id: &MarketId,
        outcome: impl Into<TradeOutcome>,
        spend: Cents,
        now: Timestamp,
    ) -> Result<TradePlan, ExchangeError> {
        let outcome = outcome.into();
        let venue = self.venue(market_id)?;
        venue.check_outcome(market_id, outcome)?;
        let acct = self.account(account_id)?;
        if !spend.is_positive() {
            return Err(ExchangeError::InvalidArgument(format!(
                "spend must be positive, got {} cents",
                spend.0
            )));
        }
        if venue.state != MarketState::Open {
            return Err(ExchangeError::MarketNotOpen {
                market: market_id.clone(),
                state: venue.state,
            });
        }
        if now >= venue.cutoff {
            return Err(ExchangeError::PastCutoff {
                market: market_id.clone(),
                cutoff: venue.cutoff,
            });
        }
        if acct.balance < spend {
            return Err(ExchangeError::InsufficientBalance {
                balance: acct.balance,
                needed: spend,
            });
        }
        let cap = self.config.wager_cap_cents;
        if acct.wagered_in(market_id) + spend > cap {
            return Err(ExchangeError::WagerCapExceeded {
                remaining: acct.remaining_allowance(market_id, cap),
            });
        }

        let index = outcome.index();
        let shares = venue.book.shares_for_spend(index, spend.to_euro())?;
        let quoted_cost = venue.book.quote_buy(index, shares)?;
        // Rounding the exact quote up to the cent must land on the spend.
        debug_assert_eq!(round_up_cents(quoted_cost), spend, "quote {quoted_cost}");
        let mut after = venue.book.clone();
        after.apply(index, shares)?;

        Ok(TradePlan {
            account_id: account_id.clone(),
            market_id: market_id.clone(),
            outcome,
            spend,
            shares,
            quoted_cost,
            timestamp: now,
            prices_after: after.prices(),
            market_version: venue.version,
        })
    }

    /// Applies a plan produced by [`plan_trade`](Self::plan_trade).
    pub fn commit_trade(&mut self, plan: TradePlan) -> Result<Trade, ExchangeError> {
        let venue = self.venue(&plan.market_id)?;
        if venue.version != plan.market_version || venue.state != MarketState::Open {
            return Err(ExchangeError::StalePlan(plan.market_id));
        }
        let outcomes = venue.book.outcomes();
        let acct = self.account(&plan.account_id)?;
        let cap = self.config.wager_cap_cents;
        if acct.balance < plan.spend || acct.wagered_in(&plan.market_id) + plan.spend > cap {
            return Err(ExchangeError::StalePlan(plan.market_id));
        }

        // Every check is done; nothing below can fail.
        let index = plan.outcome.index();
        if let Some(m) = self.markets.get_mut(&plan.market_id) {
            m.book.apply(index, plan.shares)?;
            m.version += 1;
        } else if let Some(j) = self.joints.get_mut(&plan.market_id) {
            j.book.apply(index, plan.shares)?;
            j.version += 1;
        }

        let acct = self
            .accounts
            .get_mut(&plan.account_id)
            .expect("account checked above");
        acct.balance -= plan.spend;
        acct.positions
            .entry(plan.market_id.clone())
            .or_insert_with(|| vec![0.0; outcomes])[index] += plan.shares;
        *acct.wagered.entry(plan.market_id.clone()).or_default() += plan.spend;

        let trade_id = TradeId(format!("T{:06}", self.trades.len() + 1));
        self.totals.maker_take += plan.spend;
        self.ledger.push(LedgerEntry::TradeDebit {
            trade_id: trade_id.clone(),
            account_id: plan.account_id.clone(),
            market_id: plan.market_id.clone(),
            amount: plan.spend,
        });
        let trade = Trade {
            trade_id,
            account_id: plan.account_id,
            market_id: plan.market_id,
            outcome: plan.outcome,
            shares: plan.shares,
            cost: plan.spend,
            quoted_cost: plan.quoted_cost,
            timestamp: plan.timestamp,
            prices_after: plan.prices_after,
        };
        self.trades.push(trade.clone());
        Ok(trade)
    }

    /// Spends `spend` cents of `account_id`'s scrip on `outcome`.
    pub fn execute_trade(
        &mut self,
        account_id: &AccountId,
        market_id: &MarketId,
        outcome: impl Into<TradeOutcome>,
        spend: Cents,
        now: Timestamp,
    ) -> Result<Trade, ExchangeError> {
        let plan = self.plan_trade(account_id, market_id, outcome, spend, now)?;
        self.commit_trade(plan)
    }

    /// Audits the exchange-wide invariants. Returns the first violation found.
    pub fn check_invariants(&self) -> Result<(), String> {
        for m in self.markets.values() {
            let sum: f64 = m.book.prices().iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(format!("market {} prices sum to {sum}", m.market_id));
            }
        }
        for j in self.joints.values() {
            let sum: f64 = j.book.prices().iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(format!("joint market {} prices sum to {sum}", j.joint_id));
            }
        }
        let cap = self.config.wager_cap_cents;
        for a in self.accounts.values() {
            if a.balance.0 < 0 {
                return Err(format!("account {} has negative balance", a.account_id));
            }
            if let Some((m, w)) = a.wagered.iter().find(|(_, w)| **w > cap) {
                return Err(format!("account {} wagered {w} in {m}, over cap", a.account_id));
            }
        }
        let balances: Cents = self.accounts.values().map(|a| a.balance).sum();
        let t = self.totals;
        if balances + t.maker_take - t.payouts != t.credits_issued {
            return Err(format!(
                "ledger drift: balances {balances} + take {} - payouts {} != credits {}",
                t.maker_take, t.payouts, t.credits_issued
            ));
        }
        Ok(())
    }
}

pub(crate) struct Venue<'a> {
    pub book: &'a LmsrBook,
    pub state: MarketState,
    pub cutoff: Timestamp,
    pub version: u64,
    pub joint: bool,
}

impl Venue<'_> {
    fn check_outcome(&self, market: &MarketId, outcome: TradeOutcome) -> Result<(), ExchangeError> {
        let ok = matches!(
            (self.joint, outcome),
            (false, TradeOutcome::Base(_)) | (true, TradeOutcome::Joint(_))
        );
        if ok {
            Ok(())
        } else {
            Err(ExchangeError::OutcomeMismatch {
                market: market.clone(),
                outcome,
            })
        }
    }
}

/// Rounds a euro amount up to whole cents, ignoring float noise below 1e-6
/// cent so an exact inverse quote maps back onto its spend.
pub fn round_up_cents(euro: f64) -> Cents {
    Cents(((euro * 100.0) - 1e-6).ceil() as i64)
}

#[cfg(test)]
mod tests;
