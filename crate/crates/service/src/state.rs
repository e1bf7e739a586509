//! The journaled state machine behind the HTTP handlers and CLI.
//!
//! Every mutation is an [`Event`]. [`ServiceState::submit`] validates the
//! event against current state without touching it, appends it to the
//! journal, and only then commits it. Replay runs the same prepare/commit
//! path, so a replayed prefix equals the live state after that prefix.

use std::collections::{BTreeMap, HashMap};

use serde_json::{json, Value};
use toxmarket_core::exchange::{MarketState, TradePlan};
use toxmarket_core::registry::AssetRegistry;
use toxmarket_core::{AccountId, Cents, Exchange, ExchangeConfig, MarketId, Timestamp};

use crate::error::ApiError;
use crate::journal::{EventLog, IdempotencyTag, JournalError, Located, Record};
use crate::session::ApiSession;
use crate::views::{AccountView, JointView, MarketView, TradeResponse};

pub use crate::journal::Event;

pub const ADMIN_SCOPE: &str = "admin";

pub struct ServiceState {
    exchange: Exchange,
    sessions: HashMap<String, ApiSession>,
    /// (scope, key) -> (fingerprint, response).
    idempotency: HashMap<(String, String), (String, Value)>,
    next_seq: u64,
    log: Box<dyn EventLog>,
}

/// Validated effects of an event, applied after the journal append.
enum Prepared {
    /// Replacement exchange state computed on a copy (rare admin events).
    Replace {
        exchange: Box<Exchange>,
        session: Option<ApiSession>,
        response: Value,
    },
    Trade(TradePlan),
    Session(ApiSession),
}

impl ServiceState {
    pub fn new(config: ExchangeConfig, log: Box<dyn EventLog>) -> Self {
        Self {
            exchange: Exchange::new(config),
            sessions: HashMap::new(),
            idempotency: HashMap::new(),
            next_seq: 1,
            log,
        }
    }

    /// Rebuilds state from journal records, then continues appending to `log`.
    pub fn replay(config: ExchangeConfig, records: &[Located], log: Box<dyn EventLog>) -> Result<Self, JournalError> {
        let mut state = Self::new(config, log);
        for located in records {
            let Record {
                seq,
                idempotency,
                event,
            } = &located.record;
            let fail = |reason: String| JournalError::Replay {
                seq: *seq,
                offset: located.offset,
                reason,
            };
            if *seq != state.next_seq {
                return Err(fail(format!("expected sequence {}", state.next_seq)));
            }
            let prepared = state.prepare(event).map_err(|e| fail(e.to_string()))?;
            let response = state.commit(prepared);
            state.next_seq += 1;
            if let Some(tag) = idempotency {
                state.remember(tag.clone(), response);
            }
        }
        Ok(state)
    }

    pub fn exchange(&self) -> &Exchange {
        &self.exchange
    }

    /// Number of records journaled so far.
    pub fn journaled(&self) -> u64 {
        self.next_seq - 1
    }

    /// Journals and applies `event`. With a tag, a retry carrying the same
    /// key and request returns the original response without re-applying.
    pub fn submit(&mut self, event: Event, idempotency: Option<IdempotencyTag>) -> Result<Value, ApiError> {
        if let Some(tag) = &idempotency {
            if let Some((fingerprint, response)) = self.idempotency.get(&(tag.scope.clone(), tag.key.clone())) {
                if fingerprint == &tag.fingerprint {
                    return Ok(response.clone());
                }
                return Err(ApiError::conflict(format!(
                    "idempotency key `{}` was already used for a different request",
                    tag.key
                )));
            }
        }
        let prepared = self.prepare(&event)?;
        let record = Record {
            seq: self.next_seq,
            idempotency,
            event,
        };
        self.log
            .append(&record)
            .map_err(|e| ApiError::Journal(e.to_string()))?;
        self.next_seq += 1;
        let response = self.commit(prepared);
        if let Some(tag) = record.idempotency {
            self.remember(tag, response.clone());
        }
        Ok(response)
    }

    fn remember(&mut self, tag: IdempotencyTag, response: Value) {
        self.idempotency.insert((tag.scope, tag.key), (tag.fingerprint, response));
    }

    fn prepare(&self, event: &Event) -> Result<Prepared, ApiError> {
        let replace = |f: &dyn Fn(&mut Exchange) -> Result<Value, ApiError>| -> Result<Prepared, ApiError> {
            let mut copy = self.exchange.clone();
            let response = f(&mut copy)?;
            Ok(Prepared::Replace {
                exchange: Box::new(copy),
                session: None,
                response,
            })
        };
        match event {
            Event::AssetsIngested { assets } => replace(&|ex| {
                for a in assets {
                    ex.registry_mut()
                        .insert(a.clone())
                        .map_err(|e| ApiError::Invalid(format!("asset {}: {e}", a.asset_id)))?;
                }
                Ok(json!({ "accepted": assets.iter().map(|a| &a.asset_id).collect::<Vec<_>>() }))
            }),
            Event::MarketCreated {
                asset_id,
                threshold,
                b,
                cutoff,
                now,
            } => replace(&|ex| {
                let id = ex.create_market(asset_id, *threshold, *b, *cutoff, *now)?.market_id.clone();
                let m = ex.market(&id)?;
                Ok(json!(MarketView::of(ex, m)))
            }),
            Event::JointMarketCreated { event_a, event_b, b } => replace(&|ex| {
                let j = ex.create_joint_market(event_a, event_b, *b)?;
                Ok(json!(JointView::of(j)))
            }),
            Event::AccountOpened {
                account_id,
                adult_attested,
                starting_balance,
                session,
            } => {
                if !adult_attested {
                    return Err(ApiError::Invalid(
                        "participants must be attested as adults".into(),
                    ));
                }
                if session.account_id != *account_id {
                    return Err(ApiError::Invalid("session issued for a different account".into()));
                }
                let mut copy = self.exchange.clone();
                copy.create_account(account_id.clone(), *adult_attested)?;
                if starting_balance.is_positive() {
                    copy.credit_account(account_id, *starting_balance)?;
                } else if starting_balance.0 < 0 {
                    return Err(ApiError::Invalid("starting balance must not be negative".into()));
                }
                let acct = copy.account(account_id)?;
                let response = json!({ "account": AccountView::of(&copy, acct), "session": session });
                Ok(Prepared::Replace {
                    exchange: Box::new(copy),
                    session: Some(session.clone()),
                    response,
                })
            }
            Event::AccountCredited { account_id, amount } => replace(&|ex| {
                let balance = ex.credit_account(account_id, *amount)?;
                Ok(json!({ "account_id": account_id, "balance_cents": balance.0 }))
            }),
            Event::SessionIssued { session } => {
                self.exchange.account(&session.account_id)?;
                if self.sessions.contains_key(&session.token) {
                    return Err(ApiError::conflict("token already issued"));
                }
                Ok(Prepared::Session(session.clone()))
            }
            Event::TradeExecuted {
                account_id,
                market_id,
                outcome,
                spend,
                now,
            } => Ok(Prepared::Trade(self.exchange.plan_trade(
                account_id,
                market_id,
                *outcome,
                *spend,
                *now,
            )?)),
            Event::MarketsHalted { now } => replace(&|ex| {
                let halted = ex.halt_due(*now);
                Ok(json!({ "halted": halted }))
            }),
            Event::MarketSettled {
                market_id,
                announced,
                now,
            } => replace(&|ex| {
                ex.halt_at_cutoff(market_id, *now)?;
                let report = ex.resolve_and_settle(market_id, *announced, *now)?;
                Ok(json!(report))
            }),
        }
    }

    fn commit(&mut self, prepared: Prepared) -> Value {
        match prepared {
            Prepared::Replace {
                exchange,
                session,
                response,
            } => {
                self.exchange = *exchange;
                if let Some(s) = session {
                    self.sessions.insert(s.token.clone(), s);
                }
                response
            }
            Prepared::Trade(plan) => {
                let account_id = plan.account_id.clone();
                let market_id = plan.market_id.clone();
                let trade = self
                    .exchange
                    .commit_trade(plan)
                    .expect("plan validated under the same lock");
                let acct = self.exchange.account(&account_id).expect("trading account exists");
                let cap = self.exchange.config().wager_cap_cents;
                json!(TradeResponse {
                    trade,
                    balance_cents: acct.balance.0,
                    remaining_cents: acct.remaining_allowance(&market_id, cap).0,
                })
            }
            Prepared::Session(s) => {
                let response = json!(s);
                self.sessions.insert(s.token.clone(), s);
                response
            }
        }
    }

    /// The live session for `token`, or 401.
    pub fn authenticate(&self, token: &str, now: Timestamp) -> Result<&ApiSession, ApiError> {
        let session = self
            .sessions
            .get(token)
            .ok_or_else(|| ApiError::Unauthorized("unknown token".into()))?;
        if !session.is_live(now) {
            return Err(ApiError::Unauthorized("token expired".into()));
        }
        Ok(session)
    }

    /// Journals a halt for every market whose cutoff has passed, if any.
    pub fn tick(&mut self, now: Timestamp) -> Result<(), ApiError> {
        let due = self
            .exchange
            .markets()
            .any(|m| m.state == MarketState::Open && m.cutoff <= now)
            || self
                .exchange
                .joint_markets()
                .any(|j| j.state == MarketState::Open && j.cutoff <= now);
        if due {
            self.submit(Event::MarketsHalted { now }, None)?;
        }
        Ok(())
    }

    /// Registry that an ingest would produce, for building the event.
    pub fn registry(&self) -> &AssetRegistry {
        self.exchange.registry()
    }

    /// Externally observable state, with floats as raw bits for exact comparison.
    pub fn observable(&self) -> Observable {
        let ex = &self.exchange;
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<u64>>();
        let mut prices = BTreeMap::new();
        let mut states = BTreeMap::new();
        for m in ex.markets() {
            prices.insert(m.market_id.clone(), bits(&m.prices()));
            states.insert(m.market_id.clone(), m.state);
        }
        for j in ex.joint_markets() {
            prices.insert(j.joint_id.clone(), bits(&j.prices()));
            states.insert(j.joint_id.clone(), j.state);
        }
        let mut balances = BTreeMap::new();
        let mut positions = BTreeMap::new();
        for a in ex.accounts() {
            balances.insert(a.account_id.clone(), a.balance);
            for (m, shares) in &a.positions {
                positions.insert((a.account_id.clone(), m.clone()), bits(shares));
            }
        }
        Observable {
            balances,
            positions,
            prices,
            states,
            trades: ex.trades().len(),
            sessions: self.sessions.len(),
            assets: ex.registry().len(),
            credits_issued: ex.totals().credits_issued,
            maker_take: ex.totals().maker_take,
            payouts: ex.totals().payouts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observable {
    pub balances: BTreeMap<AccountId, Cents>,
    pub positions: BTreeMap<(AccountId, MarketId), Vec<u64>>,
    pub prices: BTreeMap<MarketId, Vec<u64>>,
    pub states: BTreeMap<MarketId, MarketState>,
    pub trades: usize,
    pub sessions: usize,
    pub assets: usize,
    pub credits_issued: Cents,
    pub maker_take: Cents,
    pub payouts: Cents,
}
