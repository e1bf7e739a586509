//! Cutoff halting, resolution against announced transfer prices, payouts,
//! and the exceedance-curve audit across a ladder of thresholds.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::exchange::{Exchange, ExchangeError, LedgerEntry, Market, MarketState};
use crate::registry::AssetStatus;
use crate::types::{AccountId, AssetId, Cents, JointOutcome, MarketId, Outcome, Timestamp, TradeOutcome};

pub const SETTLEMENT_REPORT_HEADER: [&str; 5] =
    ["market_id", "account_id", "outcome", "shares", "payout_cents"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub market_id: MarketId,
    pub announced_price: Cents,
    pub winning_outcome: Outcome,
    pub resolved_at: Timestamp,
}

/// One account's holding of one outcome at settlement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettlementLine {
    pub market_id: MarketId,
    pub account_id: AccountId,
    pub outcome: TradeOutcome,
    pub shares: f64,
    pub payout: Cents,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub market_id: MarketId,
    pub winning_outcome: TradeOutcome,
    /// Every held position, winners and losers.
    pub lines: Vec<SettlementLine>,
    /// Joint markets that became fully resolved by this settlement.
    pub joint_reports: Vec<SettlementReport>,
}

impl SettlementReport {
    /// Accounts receiving a non-zero payout, in account order.
    pub fn payouts(&self) -> Vec<(AccountId, Cents)> {
        self.lines
            .iter()
            .filter(|l| l.payout.is_positive())
            .map(|l| (l.account_id.clone(), l.payout))
            .collect()
    }

    pub fn total_paid(&self) -> Cents {
        self.lines.iter().map(|l| l.payout).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SETTLEMENT_REPORT_HEADER)?;
        let mut stack = vec![self];
        while let Some(r) = stack.pop() {
            for l in &r.lines {
                w.write_record([
                    l.market_id.as_str(),
                    l.account_id.as_str(),
                    l.outcome.as_str(),
                    &l.shares.to_string(),
                    &l.payout.0.to_string(),
                ])?;
            }
            stack.extend(r.joint_reports.iter().rev());
        }
        w.flush()
    }
}

/// 100 cents per winning share, fractional cents rounded half-to-even.
pub fn payout_for_shares(shares: f64) -> Cents {
    Cents((shares * 100.0).round_ties_even() as i64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub market_id: MarketId,
    pub threshold: Cents,
    /// Market-implied probability that the transfer price exceeds `threshold`.
    pub probability: f64,
}

/// Per-threshold HIGHER prices for one asset, thresholds strictly ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpliedCurve {
    pub asset_id: AssetId,
    pub points: Vec<CurvePoint>,
}

impl ImpliedCurve {
    /// Builds a curve from markets on one asset, sorting by threshold.
    pub fn from_markets<'a, I>(asset_id: &AssetId, markets: I) -> Result<Self, ExchangeError>
    where
        I: IntoIterator<Item = &'a Market>,
    {
        let mut points: Vec<CurvePoint> = markets
            .into_iter()
            .filter(|m| &m.asset_id == asset_id && m.state != MarketState::Settled)
            .map(|m| CurvePoint {
                market_id: m.market_id.clone(),
                threshold: m.threshold,
                probability: m.price(Outcome::Higher),
            })
            .collect();
        if points.is_empty() {
            return Err(ExchangeError::NoMarkets(asset_id.clone()));
        }
        points.sort_by_key(|p| p.threshold);
        if let Some(w) = points.windows(2).find(|w| w[0].threshold == w[1].threshold) {
            return Err(ExchangeError::DuplicateThreshold {
                asset: asset_id.clone(),
                threshold: w[0].threshold,
            });
        }
        Ok(Self {
            asset_id: asset_id.clone(),
            points,
        })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.probability).collect()
    }

    /// Threshold where the curve first drops to or below one half, i.e. the
    /// market-implied median transfer price on the ladder's resolution.
    pub fn median_crossing(&self) -> Option<Cents> {
        self.points.iter().find(|p| p.probability <= 0.5).map(|p| p.threshold)
    }
}

/// Adjacent pair whose exceedance probability rises with the threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageViolation {
    /// Index of the lower threshold; the pair is (index, index + 1).
    pub index: usize,
    pub lower: CurvePoint,
    pub upper: CurvePoint,
}

impl ArbitrageViolation {
    /// Riskless profit per unit bundle: HIGHER at the lower threshold plus
    /// LOWER at the upper threshold pays at least 1 whatever the price.
    pub fn edge(&self) -> f64 {
        self.upper.probability - self.lower.probability
    }
}

/// Every adjacent pair with P(>t[i+1]) > P(>t[i]) + epsilon.
pub fn detect_arbitrage(curve: &ImpliedCurve, epsilon: f64) -> Vec<ArbitrageViolation> {
    curve
        .points
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].probability > w[0].probability + epsilon)
        .map(|(index, w)| ArbitrageViolation {
            index,
            lower: w[0].clone(),
            upper: w[1].clone(),
        })
        .collect()
}

impl Exchange {
    /// Halts `market_id` if `now` is at or past its cutoff. Idempotent.
    pub fn halt_at_cutoff(&mut self, market_id: &MarketId, now: Timestamp) -> Result<MarketState, ExchangeError> {
        if let Some(m) = self.markets.get_mut(market_id) {
            if m.state == MarketState::Open && now >= m.cutoff {
                m.state = MarketState::Halted;
            }
            return Ok(m.state);
        }
        if let Some(j) = self.joints.get_mut(market_id) {
            if j.state == MarketState::Open && now >= j.cutoff {
                j.state = MarketState::Halted;
            }
            return Ok(j.state);
        }
        Err(ExchangeError::UnknownMarket(market_id.clone()))
    }

    /// Halts every base and joint market whose cutoff has passed.
    pub fn halt_due(&mut self, now: Timestamp) -> Vec<MarketId> {
        let mut halted = Vec::new();
        for m in self.markets.values_mut() {
            if m.state == MarketState::Open && now >= m.cutoff {
                m.state = MarketState::Halted;
                halted.push(m.market_id.clone());
            }
        }
        for j in self.joints.values_mut() {
            if j.state == MarketState::Open && now >= j.cutoff {
                j.state = MarketState::Halted;
                halted.push(j.joint_id.clone());
            }
        }
        halted
    }

    /// Resolves a halted base market against the announced transfer price and
    /// pays out winning shares. Joint markets whose two bases are now both
    /// resolved are settled in the same call.
    pub fn resolve_and_settle(
        &mut self,
        market_id: &MarketId,
        announced_price: Cents,
        now: Timestamp,
    ) -> Result<SettlementReport, ExchangeError> {
        let market = self.market(market_id)?;
        match market.state {
            MarketState::Settled => return Err(ExchangeError::AlreadySettled(market_id.clone())),
            MarketState::Open => {
                return Err(ExchangeError::NotHalted {
                    market: market_id.clone(),
                    state: market.state,
                })
            }
            MarketState::Halted => {}
        }
        if !announced_price.is_positive() {
            return Err(ExchangeError::InvalidArgument(format!(
                "announced price must be positive, got {} cents",
                announced_price.0
            )));
        }
        let winner = market.winner_for(announced_price);
        let asset_id = market.asset_id.clone();

        let lines = self.pay_out(market_id, winner.index(), |i| TradeOutcome::Base(Outcome::ALL[i]));
        if let Some(m) = self.markets.get_mut(market_id) {
            m.state = MarketState::Settled;
        }
        if let Some(a) = self.registry.get_mut(&asset_id) {
            a.status = AssetStatus::Settled;
        }
        self.resolutions.insert(
            market_id.clone(),
            Resolution {
                market_id: market_id.clone(),
                announced_price,
                winning_outcome: winner,
                resolved_at: now,
            },
        );

        let mut joint_reports = Vec::new();
        let ready: Vec<(MarketId, JointOutcome)> = self
            .joints
            .values()
            .filter(|j| j.state != MarketState::Settled)
            .filter(|j| &j.event_a == market_id || &j.event_b == market_id)
            .filter_map(|j| {
                let a = self.resolutions.get(&j.event_a)?.winning_outcome;
                let b = self.resolutions.get(&j.event_b)?.winning_outcome;
                Some((j.joint_id.clone(), JointOutcome::from_parts(a, b)))
            })
            .collect();
        for (joint_id, cell) in ready {
            let lines = self.pay_out(&joint_id, cell.index(), |i| TradeOutcome::Joint(JointOutcome::ALL[i]));
            if let Some(j) = self.joints.get_mut(&joint_id) {
                j.state = MarketState::Settled;
            }
            joint_reports.push(SettlementReport {
                market_id: joint_id,
                winning_outcome: TradeOutcome::Joint(cell),
                lines,
                joint_reports: Vec::new(),
            });
        }

        Ok(SettlementReport {
            market_id: market_id.clone(),
            winning_outcome: TradeOutcome::Base(winner),
            lines,
            joint_reports,
        })
    }

    /// Halts (if due) and settles every unsettled market on an asset.
    pub fn settle_asset(
        &mut self,
        asset_id: &AssetId,
        announced_price: Cents,
        now: Timestamp,
    ) -> Result<Vec<SettlementReport>, ExchangeError> {
        let ids: Vec<MarketId> = self
            .markets_for_asset(asset_id)
            .filter(|m| m.state != MarketState::Settled)
            .map(|m| m.market_id.clone())
            .collect();
        if ids.is_empty() {
            return Err(ExchangeError::NoMarkets(asset_id.clone()));
        }
        let mut reports = Vec::with_capacity(ids.len());
        for id in ids {
            self.halt_at_cutoff(&id, now)?;
            reports.push(self.resolve_and_settle(&id, announced_price, now)?);
        }
        Ok(reports)
    }

    fn pay_out(
        &mut self,
        market_id: &MarketId,
        winner: usize,
        label: impl Fn(usize) -> TradeOutcome,
    ) -> Vec<SettlementLine> {
        let mut lines = Vec::new();
        for acct in self.accounts.values_mut() {
            let Some(pos) = acct.positions.get(market_id) else {
                continue;
            };
            let mut paid = Cents::ZERO;
            for (i, &shares) in pos.iter().enumerate() {
                if shares <= 0.0 {
                    continue;
                }
                let payout = if i == winner {
                    payout_for_shares(shares)
                } else {
                    Cents::ZERO
                };
                paid += payout;
                lines.push(SettlementLine {
                    market_id: market_id.clone(),
                    account_id: acct.account_id.clone(),
                    outcome: label(i),
                    shares,
                    payout,
                });
            }
            if paid.is_positive() {
                acct.balance += paid;
                self.totals.payouts += paid;
                self.ledger.push(LedgerEntry::Payout {
                    account_id: acct.account_id.clone(),
                    market_id: market_id.clone(),
                    amount: paid,
                });
            }
        }
        lines
    }

    pub fn implied_curve(&self, asset_id: &AssetId) -> Result<ImpliedCurve, ExchangeError> {
        if self.registry.get(asset_id).is_none() {
            return Err(ExchangeError::UnknownAsset(asset_id.clone()));
        }
        ImpliedCurve::from_markets(asset_id, self.markets.values())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExchangeConfig;
    use crate::registry::Asset;

    fn point(i: usize, p: f64) -> CurvePoint {
        CurvePoint {
            market_id: MarketId(format!("M{i}")),
            threshold: Cents(100 * (i as i64 + 1)),
            probability: p,
        }
    }

    fn curve(ps: &[f64]) -> ImpliedCurve {
        ImpliedCurve {
            asset_id: "A".into(),
            points: ps.iter().enumerate().map(|(i, &p)| point(i, p)).collect(),
        }
    }

    fn setup() -> (Exchange, MarketId) {
        let mut ex = Exchange::new(ExchangeConfig::default());
        ex.registry_mut()
            .insert(Asset {
                asset_id: "BNT".into(),
                title: "Bantry".into(),
                county: "Cork".into(),
                latitude: 51.68,
                longitude: -9.45,
                book_value: Cents(30_000_000),
                loan_reference: "L1".into(),
                status: AssetStatus::Registered,
            })
            .unwrap();
        let id = ex
            .create_market(&"BNT".into(), Cents::from_euros(250_000), 100.0, Timestamp(100), Timestamp(0))
            .unwrap()
            .market_id
            .clone();
        (ex, id)
    }

    #[test]
    fn detect_arbitrage_examples() {
        assert!(detect_arbitrage(&curve(&[0.9, 0.7, 0.7, 0.1]), 0.0).is_empty());
        let v = detect_arbitrage(&curve(&[0.4, 0.6]), 0.05);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, 0);
        assert!((v[0].edge() - 0.2).abs() < 1e-12);
        assert!(detect_arbitrage(&curve(&[0.5, 0.52]), 0.05).is_empty());
    }

    // Bundle = HIGHER at t_i plus LOWER at t_{i+1}. For every true price the
    // bundle pays at least 1, so profit = payoff - (p_i + 1 - p_{i+1}) is
    // positive in every state exactly when p_{i+1} > p_i.
    #[test]
    fn violations_are_riskless_bundles() {
        let cases = [(0.4, 0.6), (0.3, 0.31), (0.7, 0.2), (0.5, 0.5)];
        for (lo, hi) in cases {
            let c = curve(&[lo, hi]);
            let (t0, t1) = (c.points[0].threshold, c.points[1].threshold);
            let prices = [Cents(t0.0 - 1), t0, Cents(t0.0 + 1), t1, Cents(t1.0 + 1)];
            let cost = lo + (1.0 - hi);
            let worst = prices
                .iter()
                .map(|&x| {
                    let higher_lo = if x > t0 { 1.0 } else { 0.0 };
                    let lower_hi = if x > t1 { 0.0 } else { 1.0 };
                    higher_lo + lower_hi - cost
                })
                .fold(f64::INFINITY, f64::min);
            assert_eq!(!detect_arbitrage(&c, 0.0).is_empty(), worst > 0.0, "{lo} {hi}");
        }
    }

    #[test]
    fn halt_boundary_and_idempotence() {
        let (mut ex, id) = setup();
        assert_eq!(ex.halt_at_cutoff(&id, Timestamp(99)).unwrap(), MarketState::Open);
        assert_eq!(ex.halt_at_cutoff(&id, Timestamp(100)).unwrap(), MarketState::Halted);
        assert_eq!(ex.halt_at_cutoff(&id, Timestamp(200)).unwrap(), MarketState::Halted);
    }

    #[test]
    fn settle_pays_winners_and_tie_goes_lower() {
        let (mut ex, id) = setup();
        ex.open_account("alice".into(), true).unwrap();
        ex.open_account("bob".into(), true).unwrap();
        ex.execute_trade(&"alice".into(), &id, Outcome::Higher, Cents(513), Timestamp(1)).unwrap();
        ex.execute_trade(&"bob".into(), &id, Outcome::Lower, Cents(700), Timestamp(2)).unwrap();

        let mut tie = ex.clone();
        tie.halt_at_cutoff(&id, Timestamp(100)).unwrap();
        let r = tie.resolve_and_settle(&id, Cents::from_euros(250_000), Timestamp(101)).unwrap();
        assert_eq!(r.winning_outcome, TradeOutcome::Base(Outcome::Lower));
        assert_eq!(r.payouts().len(), 1);
        assert_eq!(r.payouts()[0].0.as_str(), "bob");

        ex.halt_at_cutoff(&id, Timestamp(100)).unwrap();
        let r = ex.resolve_and_settle(&id, Cents::from_euros(260_000), Timestamp(101)).unwrap();
        let alice_shares = ex.account(&"alice".into()).unwrap().position(&id, 0);
        assert_eq!(r.payouts(), vec![("alice".into(), payout_for_shares(alice_shares))]);
        assert_eq!(ex.market(&id).unwrap().state, MarketState::Settled);
        assert_eq!(ex.registry().get(&"BNT".into()).unwrap().status, AssetStatus::Settled);
        ex.check_invariants().unwrap();

        let before = ex.clone();
        assert_eq!(
            ex.resolve_and_settle(&id, Cents::from_euros(260_000), Timestamp(102)),
            Err(ExchangeError::AlreadySettled(id.clone()))
        );
        assert_eq!(format!("{:?}", ex), format!("{:?}", before));
    }

    #[test]
    fn settle_requires_halt_and_positive_price() {
        let (mut ex, id) = setup();
        assert!(matches!(
            ex.resolve_and_settle(&id, Cents(1), Timestamp(0)),
            Err(ExchangeError::NotHalted { .. })
        ));
        ex.halt_at_cutoff(&id, Timestamp(100)).unwrap();
        assert!(matches!(
            ex.resolve_and_settle(&id, Cents(0), Timestamp(100)),
            Err(ExchangeError::InvalidArgument(_))
        ));
    }

    #[test]
    fn ten_shares_pay_ten_euro() {
        assert_eq!(payout_for_shares(10.0), Cents(1000));
        assert_eq!(payout_for_shares(0.125), Cents(12));
        assert_eq!(payout_for_shares(0.135), Cents(14));
    }

    #[test]
    fn single_market_curve_and_unknown_asset() {
        let (ex, _) = setup();
        let c = ex.implied_curve(&"BNT".into()).unwrap();
        assert_eq!(c.probabilities(), vec![0.5]);
        assert!(matches!(ex.implied_curve(&"nope".into()), Err(ExchangeError::UnknownAsset(_))));
    }

    #[test]
    fn report_csv_lists_every_position() {
        let (mut ex, id) = setup();
        ex.open_account("a".into(), true).unwrap();
        ex.execute_trade(&"a".into(), &id, Outcome::Higher, Cents(100), Timestamp(1)).unwrap();
        ex.execute_trade(&"a".into(), &id, Outcome::Lower, Cents(100), Timestamp(1)).unwrap();
        ex.halt_at_cutoff(&id, Timestamp(100)).unwrap();
        let r = ex.resolve_and_settle(&id, Cents(1), Timestamp(100)).unwrap();
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "market_id,account_id,outcome,shares,payout_cents");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("M1,a,HIGHER,") && lines[1].ends_with(",0"));
        assert!(lines[2].starts_with("M1,a,LOWER,"));
    }
}
