use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::agents::{belief_higher, Agent, Role};
use super::{ArbitrageWindow, ClassPnl, ManipulationReport, ShockMetrics, SimConfig, SimError, SimMetrics};
use crate::config::ExchangeConfig;
use crate::exchange::Exchange;
use crate::registry::{Asset, AssetStatus};
use crate::settlement::detect_arbitrage;
use crate::types::{AssetId, Cents, MarketId, Outcome, Timestamp};

// Independent ChaCha streams, so adding or removing one agent class does not
// shift the randomness any other class sees.
const SIGNAL_STREAM: u64 = 1;
const ORDER_STREAM: u64 = 2;
const MANIPULATOR_SLOT_STREAM: u64 = 3;
const NOISE_STREAM_BASE: u64 = 1_000;

const ASSET: &str = "SIM-1";

/// Runs one session and settles it at `config.true_price`.
pub fn run_session(config: &SimConfig) -> Result<SimMetrics, SimError> {
    config.validate()?;
    Session::new(config)?.run(None)
}

/// Like [`run_session`], but at the start of `shock_round` the true price
/// jumps to `new_true_price` and informed agents redraw their signals around
/// it. The session settles at the new price.
pub fn shock_session(config: &SimConfig, shock_round: u32, new_true_price: Cents) -> Result<SimMetrics, SimError> {
    config.validate()?;
    if shock_round < 1 || shock_round >= config.rounds {
        return Err(SimError::ShockRound {
            shock_round,
            rounds: config.rounds,
        });
    }
    if !new_true_price.is_positive() {
        return Err(SimError::Config(format!(
            "new true price must be positive, got {}",
            new_true_price.0
        )));
    }
    Session::new(config)?.run(Some((shock_round, new_true_price)))
}

/// Paired runs on one seed: a baseline without manipulators and a treatment
/// with `max(1, n_manipulators)` of them.
pub fn manipulation_experiment(config: &SimConfig) -> Result<ManipulationReport, SimError> {
    config.validate()?;
    let baseline_cfg = SimConfig {
        n_manipulators: 0,
        ..config.clone()
    };
    let treatment_cfg = SimConfig {
        n_manipulators: config.n_manipulators.max(1),
        ..config.clone()
    };
    let baseline = Session::new(&baseline_cfg)?.run(None)?;
    let treatment = Session::new(&treatment_cfg)?.run(None)?;
    let displacement = treatment
        .final_prices()
        .iter()
        .zip(baseline.final_prices())
        .map(|(t, b)| (t - b).abs())
        .collect();
    Ok(ManipulationReport {
        manipulator_profit: treatment.pnl.manipulator,
        baseline,
        treatment,
        displacement,
    })
}

struct Session<'a> {
    cfg: &'a SimConfig,
    ex: Exchange,
    asset: AssetId,
    /// Ascending threshold order.
    markets: Vec<MarketId>,
    agents: Vec<Agent>,
    signal_rng: ChaCha8Rng,
    order_rng: ChaCha8Rng,
    slot_rng: ChaCha8Rng,
    true_price: Cents,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl<'a> Session<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self, SimError> {
        let mut ex = Exchange::new(ExchangeConfig {
            default_b: cfg.b,
            wager_cap_cents: cfg.wager_cap,
            starting_balance_cents: Cents::ZERO,
        });
        let asset = AssetId::new(ASSET);
        ex.registry_mut()
            .insert(Asset {
                asset_id: asset.clone(),
                title: "Simulated asset".into(),
                county: "Dublin".into(),
                latitude: 53.35,
                longitude: -6.26,
                book_value: cfg.true_price,
                loan_reference: "SIM".into(),
                status: AssetStatus::Registered,
            })
            .map_err(|e| SimError::Config(e.to_string()))?;
        let cutoff = Timestamp(i64::from(cfg.rounds));
        let mut markets = Vec::with_capacity(cfg.thresholds.len());
        for &t in &cfg.thresholds {
            let m = ex.create_market(&asset, t, cfg.b, cutoff, Timestamp(0))?;
            markets.push(m.market_id.clone());
        }

        let classes = [
            (Role::Informed, cfg.n_informed, cfg.budgets.informed),
            (Role::Noise, cfg.n_noise, cfg.budgets.noise),
            (Role::Arbitrageur, cfg.n_arbitrageurs, cfg.budgets.arbitrageur),
            (Role::Manipulator, cfg.n_manipulators, cfg.budgets.manipulator),
        ];
        let mut agents = Vec::new();
        for (role, count, budget) in classes {
            for n in 0..count {
                let rng = stream(cfg.seed, NOISE_STREAM_BASE + n as u64);
                let mut agent = Agent::new(role, n, rng);
                ex.create_account(agent.account.clone(), true)?;
                if budget.is_positive() {
                    ex.credit_account(&agent.account, budget)?;
                    agent.credited = budget;
                }
                agents.push(agent);
            }
        }

        let mut s = Self {
            cfg,
            ex,
            asset,
            markets,
            agents,
            signal_rng: stream(cfg.seed, SIGNAL_STREAM),
            order_rng: stream(cfg.seed, ORDER_STREAM),
            slot_rng: stream(cfg.seed, MANIPULATOR_SLOT_STREAM),
            true_price: cfg.true_price,
        };
        s.draw_signals();
        Ok(s)
    }

    fn draw_signals(&mut self) {
        let sigma = self.cfg.signal_noise_sigma.0 as f64;
        let center = self.true_price.0 as f64;
        for a in self.agents.iter_mut().filter(|a| a.role == Role::Informed) {
            let z: f64 = self.signal_rng.sample(StandardNormal);
            a.signal = center + sigma * z;
        }
    }

    fn run(mut self, shock: Option<(u32, Cents)>) -> Result<SimMetrics, SimError> {
        let cfg = self.cfg;
        let old_price = self.true_price;
        let mut curves: Vec<Vec<f64>> = Vec::with_capacity(cfg.rounds as usize);
        let mut windows: Vec<ArbitrageWindow> = Vec::new();
        let mut open: BTreeMap<usize, usize> = BTreeMap::new();

        for round in 0..cfg.rounds {
            if let Some((at, price)) = shock {
                if round == at {
                    self.true_price = price;
                    self.draw_signals();
                }
            }
            for i in self.turn_order() {
                self.act(i, round)?;
            }

            let curve = self.ex.implied_curve(&self.asset)?;
            let inverted: Vec<usize> = detect_arbitrage(&curve, cfg.arbitrage_epsilon)
                .iter()
                .map(|v| v.index)
                .collect();
            open.retain(|index, w| {
                let still = inverted.contains(index);
                if !still {
                    windows[*w].close_round = Some(round);
                }
                still
            });
            for index in inverted {
                open.entry(index).or_insert_with(|| {
                    windows.push(ArbitrageWindow {
                        index,
                        open_round: round,
                        close_round: None,
                    });
                    windows.len() - 1
                });
            }
            curves.push(curve.probabilities());

            if cfg.check_invariants {
                self.ex
                    .check_invariants()
                    .map_err(|message| SimError::Invariant { round, message })?;
            }
        }

        let end = Timestamp(i64::from(cfg.rounds));
        self.ex.settle_asset(&self.asset, self.true_price, end)?;
        self.ex.check_invariants().map_err(|message| SimError::Invariant {
            round: cfg.rounds,
            message,
        })?;

        let mut pnl = ClassPnl::default();
        for a in &self.agents {
            let net = self.ex.account(&a.account)?.balance - a.credited;
            let slot = match a.role {
                Role::Informed => &mut pnl.informed,
                Role::Noise => &mut pnl.noise,
                Role::Manipulator => &mut pnl.manipulator,
                Role::Arbitrageur => &mut pnl.arbitrageur,
            };
            *slot += net;
        }

        let last = curves.last().cloned().unwrap_or_default();
        let final_errors = cfg
            .thresholds
            .iter()
            .zip(&last)
            .map(|(t, p)| (p - indicator(self.true_price, *t)).abs())
            .collect();
        let shock = shock.map(|(at, new_price)| shock_metrics(&cfg.thresholds, &curves, at, old_price, new_price));

        Ok(SimMetrics {
            seed: cfg.seed,
            thresholds: cfg.thresholds.clone(),
            settlement_price: self.true_price,
            final_errors,
            arbitrage_windows: windows,
            shock,
            pnl,
            trades: self.ex.trades().len(),
            ledger: self.ex.totals(),
            balances: self.ex.accounts().map(|a| a.balance).sum(),
            curves,
        })
    }

    /// Non-manipulators in shuffled order; manipulators slotted in from their
    /// own stream so the rest of the order is the same with or without them.
    fn turn_order(&mut self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.agents.len())
            .filter(|&i| self.agents[i].role != Role::Manipulator)
            .collect();
        order.shuffle(&mut self.order_rng);
        for i in 0..self.agents.len() {
            if self.agents[i].role == Role::Manipulator {
                let slot = self.slot_rng.random_range(0..=order.len());
                order.insert(slot, i);
            }
        }
        order
    }

    fn act(&mut self, agent: usize, round: u32) -> Result<(), SimError> {
        match self.agents[agent].role {
            Role::Informed => self.act_informed(agent, round),
            Role::Noise => self.act_noise(agent, round),
            Role::Manipulator => self.act_manipulator(agent, round),
            Role::Arbitrageur => self.act_arbitrageur(agent, round),
        }
    }

    fn act_informed(&mut self, agent: usize, round: u32) -> Result<(), SimError> {
        let sigma = self.cfg.signal_noise_sigma.0 as f64;
        let signal = self.agents[agent].signal;
        for k in 0..self.markets.len() {
            let t = self.cfg.thresholds[k].0 as f64;
            let belief = belief_higher(signal, t, sigma);
            let (side, target) = if signal > t {
                (Outcome::Higher, belief)
            } else {
                (Outcome::Lower, 1.0 - belief)
            };
            let want = self.spend_to_reach(k, side, target, self.cfg.round_spend.informed)?;
            self.buy(agent, k, side, want, round)?;
        }
        Ok(())
    }

    fn act_noise(&mut self, agent: usize, round: u32) -> Result<(), SimError> {
        let (k, higher, want) = self.agents[agent].noise_draw(self.markets.len(), self.cfg.round_spend.noise.max(Cents(1)));
        let side = if higher { Outcome::Higher } else { Outcome::Lower };
        let want = want.min(self.cfg.round_spend.noise);
        self.buy(agent, k, side, want, round)?;
        Ok(())
    }

    fn act_manipulator(&mut self, agent: usize, round: u32) -> Result<(), SimError> {
        let target = self.cfg.manipulation_target;
        let mut best: Option<(usize, f64)> = None;
        for k in 0..self.markets.len() {
            if !self.allowance(agent, k)?.is_positive() {
                continue;
            }
            let p = self.ex.market(&self.markets[k])?.price(target);
            if best.is_none_or(|(_, bp)| p < bp) {
                best = Some((k, p));
            }
        }
        if let Some((k, _)) = best {
            self.buy(agent, k, target, self.cfg.round_spend.manipulator, round)?;
        }
        Ok(())
    }

    fn act_arbitrageur(&mut self, agent: usize, round: u32) -> Result<(), SimError> {
        let limit = self.cfg.round_spend.arbitrageur;
        for _ in 0..self.markets.len() {
            let curve = self.ex.implied_curve(&self.asset)?;
            let violations = detect_arbitrage(&curve, self.cfg.arbitrage_epsilon);
            let Some(v) = violations
                .iter()
                .reduce(|a, b| if b.edge() > a.edge() { b } else { a })
            else {
                break;
            };
            let mid = 0.5 * (v.lower.probability + v.upper.probability);
            let i = v.index;
            let want = self.spend_to_reach(i, Outcome::Higher, mid, limit)?;
            let a = self.buy(agent, i, Outcome::Higher, want, round)?;
            let want = self.spend_to_reach(i + 1, Outcome::Lower, 1.0 - mid, limit)?;
            let b = self.buy(agent, i + 1, Outcome::Lower, want, round)?;
            if !(a + b).is_positive() {
                break;
            }
        }
        Ok(())
    }

    /// Whole cents needed to lift `side` on market `k` to `target`, capped.
    fn spend_to_reach(&self, k: usize, side: Outcome, target: f64, cap: Cents) -> Result<Cents, SimError> {
        let book = &self.ex.market(&self.markets[k])?.book;
        let euro = book.spend_to_reach(side.index(), target).map_err(crate::exchange::ExchangeError::from)?;
        Ok(Cents((euro * 100.0).floor() as i64).min(cap))
    }

    fn allowance(&self, agent: usize, k: usize) -> Result<Cents, SimError> {
        let acct = self.ex.account(&self.agents[agent].account)?;
        Ok(acct
            .remaining_allowance(&self.markets[k], self.cfg.wager_cap)
            .min(acct.balance))
    }

    /// Buys up to `want`, clipped to balance and wager cap. Returns the spend.
    fn buy(&mut self, agent: usize, k: usize, side: Outcome, want: Cents, round: u32) -> Result<Cents, SimError> {
        let spend = want.min(self.allowance(agent, k)?);
        if !spend.is_positive() {
            return Ok(Cents::ZERO);
        }
        let account = self.agents[agent].account.clone();
        self.ex
            .execute_trade(&account, &self.markets[k], side, spend, Timestamp(i64::from(round)))?;
        Ok(spend)
    }
}

fn indicator(price: Cents, threshold: Cents) -> f64 {
    if price > threshold {
        1.0
    } else {
        0.0
    }
}

fn shock_metrics(thresholds: &[Cents], curves: &[Vec<f64>], at: u32, old: Cents, new: Cents) -> ShockMetrics {
    let pre = curves[at as usize - 1].clone();
    let last = curves.last().expect("at least one round");
    let mut straddled = Vec::new();
    let mut half_lives = vec![None; thresholds.len()];
    for (k, &t) in thresholds.iter().enumerate() {
        if indicator(old, t) == indicator(new, t) {
            continue;
        }
        straddled.push(k);
        let delta = last[k] - pre[k];
        let hl = if delta.abs() < 1e-12 {
            0
        } else {
            let crossed = (at as usize..curves.len())
                .find(|&r| (curves[r][k] - pre[k]) * delta.signum() >= 0.5 * delta.abs())
                .expect("the final round is past the halfway mark");
            (crossed - at as usize + 1) as u32
        };
        half_lives[k] = Some(hl);
    }
    let drift = last.iter().zip(&pre).map(|(l, p)| l - p).collect();
    ShockMetrics {
        shock_round: at,
        old_price: old,
        new_price: new,
        half_life: half_lives.iter().flatten().copied().max().unwrap_or(0),
        straddled,
        pre_shock: pre,
        half_lives,
        drift,
    }
}
