//! Joint markets over the product outcome space of two base events, the
//! dependency (lift) report read off their prices, and the proximity
//! heuristic that proposes which asset pairs deserve a joint market.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::exchange::{Exchange, ExchangeError, Market, MarketState};
use crate::lmsr::LmsrBook;
use crate::registry::AssetRegistry;
use crate::types::{AssetId, JointOutcome, MarketId, Outcome, Timestamp};

pub const DEFAULT_LIFT_EPSILON: f64 = 0.05;

/// Security over (event_a, event_b) with cells HH, HL, LH, LL.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointMarket {
    pub joint_id: MarketId,
    pub event_a: MarketId,
    pub event_b: MarketId,
    pub book: LmsrBook,
    pub state: MarketState,
    /// Earlier of the two base cutoffs.
    pub cutoff: Timestamp,
    pub version: u64,
}

impl JointMarket {
    pub fn prices(&self) -> [f64; 4] {
        let p = self.book.prices();
        [p[0], p[1], p[2], p[3]]
    }

    pub fn price(&self, cell: JointOutcome) -> f64 {
        self.prices()[cell.index()]
    }

    /// Marginal probability of `outcome` for base event `event`.
    pub fn marginal(&self, event: &MarketId, outcome: Outcome) -> Result<f64, ExchangeError> {
        let p = self.prices();
        let on_a = if event == &self.event_a {
            true
        } else if event == &self.event_b {
            false
        } else {
            return Err(ExchangeError::UnknownMarket(event.clone()));
        };
        Ok(JointOutcome::ALL
            .iter()
            .filter(|cell| {
                let (a, b) = cell.parts();
                if on_a {
                    a == outcome
                } else {
                    b == outcome
                }
            })
            .map(|cell| p[cell.index()])
            .sum())
    }

    pub fn dependency_report(&self, epsilon: f64) -> DependencyReport {
        let p_joint_hh = self.price(JointOutcome::HigherHigher);
        let p = self.prices();
        let p_marginal_a = p[0] + p[1];
        let p_marginal_b = p[0] + p[2];
        let lift = p_joint_hh / (p_marginal_a * p_marginal_b);
        let relation = if lift > 1.0 + epsilon {
            Dependency::Complements
        } else if lift < 1.0 - epsilon {
            Dependency::Substitutes
        } else {
            Dependency::Independent
        };
        DependencyReport {
            joint_id: self.joint_id.clone(),
            p_joint_hh,
            p_marginal_a,
            p_marginal_b,
            lift,
            relation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Dependency {
    /// Super-additive: both HIGHER together more often than independence.
    Complements,
    /// Sub-additive.
    Substitutes,
    Independent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependencyReport {
    pub joint_id: MarketId,
    pub p_joint_hh: f64,
    pub p_marginal_a: f64,
    pub p_marginal_b: f64,
    /// p(HH) / (p_a * p_b); exactly 1 under independence.
    pub lift: f64,
    pub relation: Dependency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairProposal {
    pub asset_a: AssetId,
    pub asset_b: AssetId,
    pub distance_km: f64,
}

/// Asset pairs within `radius_km` that both have an open base market and no
/// joint market yet, nearest first, at most `max_pairs`.
pub fn propose_pairs<'a>(
    registry: &AssetRegistry,
    markets: impl IntoIterator<Item = &'a Market>,
    joints: impl IntoIterator<Item = &'a JointMarket>,
    radius_km: f64,
    max_pairs: usize,
) -> Vec<PairProposal> {
    if !(radius_km > 0.0) || max_pairs == 0 {
        return Vec::new();
    }
    let markets: BTreeMap<&MarketId, &Market> = markets.into_iter().map(|m| (&m.market_id, m)).collect();
    let open_assets: BTreeSet<&AssetId> = markets
        .values()
        .filter(|m| m.state == MarketState::Open)
        .map(|m| &m.asset_id)
        .collect();
    let covered: BTreeSet<(&AssetId, &AssetId)> = joints
        .into_iter()
        .filter_map(|j| {
            let a = &markets.get(&j.event_a)?.asset_id;
            let b = &markets.get(&j.event_b)?.asset_id;
            Some(if a <= b { (a, b) } else { (b, a) })
        })
        .collect();

    let assets: Vec<_> = open_assets.iter().filter_map(|id| registry.get(id)).collect();
    let mut pairs = Vec::new();
    for (i, a) in assets.iter().enumerate() {
        for b in &assets[i + 1..] {
            if covered.contains(&(&a.asset_id, &b.asset_id)) {
                continue;
            }
            let d = a.location().distance_km(&b.location());
            if d <= radius_km {
                pairs.push(PairProposal {
                    asset_a: a.asset_id.clone(),
                    asset_b: b.asset_id.clone(),
                    distance_km: d,
                });
            }
        }
    }
    // candidates were generated in (a, b) id order; the stable sort keeps it for ties
    pairs.sort_by(|x, y| x.distance_km.total_cmp(&y.distance_km));
    pairs.truncate(max_pairs);
    pairs
}

impl Exchange {
    pub fn joint_markets(&self) -> impl Iterator<Item = &JointMarket> {
        self.joints.values()
    }

    pub fn joint_market(&self, id: &MarketId) -> Result<&JointMarket, ExchangeError> {
        self.joints
            .get(id)
            .ok_or_else(|| ExchangeError::UnknownMarket(id.clone()))
    }

    pub fn create_joint_market(
        &mut self,
        market_a: &MarketId,
        market_b: &MarketId,
        b: f64,
    ) -> Result<&JointMarket, ExchangeError> {
        if market_a == market_b {
            return Err(ExchangeError::IdenticalEvents);
        }
        let (ma, mb) = (self.market(market_a)?, self.market(market_b)?);
        for m in [ma, mb] {
            if m.state != MarketState::Open {
                return Err(ExchangeError::MarketNotOpen {
                    market: m.market_id.clone(),
                    state: m.state,
                });
            }
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(ExchangeError::InvalidArgument(format!(
                "liquidity b must be positive, got {b}"
            )));
        }
        let cutoff = ma.cutoff.min(mb.cutoff);
        let joint_id = MarketId(format!("J{}", self.next_joint));
        self.next_joint += 1;
        let joint = JointMarket {
            joint_id: joint_id.clone(),
            event_a: market_a.clone(),
            event_b: market_b.clone(),
            book: LmsrBook::new(4, b)?,
            state: MarketState::Open,
            cutoff,
            version: 0,
        };
        Ok(self.joints.entry(joint_id).or_insert(joint))
    }

    pub fn dependency_report(&self, joint_id: &MarketId, epsilon: f64) -> Result<DependencyReport, ExchangeError> {
        Ok(self.joint_market(joint_id)?.dependency_report(epsilon))
    }

    pub fn propose_pairs(&self, radius_km: f64, max_pairs: usize) -> Vec<PairProposal> {
        propose_pairs(
            &self.registry,
            self.markets.values(),
            self.joints.values(),
            radius_km,
            max_pairs,
        )
    }
}
