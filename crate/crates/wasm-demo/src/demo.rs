//! Plain-Rust halves of the browser exports, so they can be tested natively.
//! Everything returns JSON text; the page parses it.

use std::time::Duration;

use serde::Serialize;
use toxmarket_core::lmsr::LmsrBook;
use toxmarket_core::optimizer::{optimize_basket, BasketInstance};
use toxmarket_core::simulator::{ladder, run_session, SimConfig, DEFAULT_LADDER};
use toxmarket_core::Cents;

/// Longest solve the page may ask for; the browser tab blocks meanwhile.
pub const MAX_TIME_LIMIT_MS: u64 = 5_000;
pub const MAX_ROUNDS: u32 = 1_000;

#[derive(Serialize)]
struct QuoteJson {
    shares: f64,
    cost_eur: f64,
    prices_before: Vec<f64>,
    prices_after: Vec<f64>,
}

/// A single binary market held in the page.
pub struct Explorer {
    book: LmsrBook,
}

impl Explorer {
    pub fn new(b: f64) -> Result<Self, String> {
        Ok(Self {
            book: LmsrBook::new(2, b).map_err(|e| e.to_string())?,
        })
    }

    pub fn prices(&self) -> Vec<f64> {
        self.book.prices()
    }

    pub fn max_loss(&self) -> f64 {
        self.book.max_loss()
    }

    /// What spending `spend_eur` on outcome 0 (HIGHER) or 1 (LOWER) would buy.
    pub fn quote(&self, outcome: usize, spend_eur: f64) -> Result<String, String> {
        let (json, _) = self.plan(outcome, spend_eur)?;
        Ok(json)
    }

    pub fn buy(&mut self, outcome: usize, spend_eur: f64) -> Result<String, String> {
        let (json, shares) = self.plan(outcome, spend_eur)?;
        self.book.apply(outcome, shares).map_err(|e| e.to_string())?;
        Ok(json)
    }

    fn plan(&self, outcome: usize, spend_eur: f64) -> Result<(String, f64), String> {
        let shares = self.book.shares_for_spend(outcome, spend_eur).map_err(|e| e.to_string())?;
        let mut after = self.book.clone();
        after.apply(outcome, shares).map_err(|e| e.to_string())?;
        let q = QuoteJson {
            shares,
            cost_eur: self.book.quote_buy(outcome, shares).map_err(|e| e.to_string())?,
            prices_before: self.book.prices(),
            prices_after: after.prices(),
        };
        Ok((serde_json::to_string(&q).expect("quote serializes"), shares))
    }
}

/// Solves an instance in the `n,budget_cents` text format.
pub fn optimize(instance: &str, time_limit_ms: u64) -> Result<String, String> {
    let inst = BasketInstance::parse(instance).map_err(|e| e.to_string())?;
    let limit = Duration::from_millis(time_limit_ms.min(MAX_TIME_LIMIT_MS));
    let sol = optimize_basket(&inst, limit).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&sol).expect("solution serializes"))
}

#[derive(Serialize)]
struct SimJson {
    thresholds_eur: Vec<f64>,
    true_price_eur: f64,
    /// Per round, the HIGHER price at each threshold.
    curves: Vec<Vec<f64>>,
    final_errors: Vec<f64>,
    arbitrage_windows: usize,
    ledger_conserved: bool,
}

/// One simulated session on the default ladder around `true_price_eur`.
pub fn simulate(
    seed: u64,
    true_price_eur: f64,
    n_informed: usize,
    n_noise: usize,
    n_manipulators: usize,
    rounds: u32,
) -> Result<String, String> {
    if rounds > MAX_ROUNDS {
        return Err(format!("at most {MAX_ROUNDS} rounds"));
    }
    if !(true_price_eur.is_finite() && true_price_eur >= 1.0) {
        return Err("true price must be at least 1 euro".into());
    }
    let mut cfg = SimConfig {
        seed,
        true_price: Cents((true_price_eur * 100.0).round() as i64),
        n_informed,
        n_noise,
        n_manipulators,
        rounds,
        ..SimConfig::default()
    };
    cfg.signal_noise_sigma = Cents(cfg.true_price.0 / 20);
    cfg.thresholds = ladder(cfg.true_price, &DEFAULT_LADDER);
    let m = run_session(&cfg).map_err(|e| e.to_string())?;
    let out = SimJson {
        thresholds_eur: m.thresholds.iter().map(|t| t.0 as f64 / 100.0).collect(),
        true_price_eur: m.settlement_price.0 as f64 / 100.0,
        final_errors: m.final_errors.clone(),
        arbitrage_windows: m.arbitrage_windows.len(),
        ledger_conserved: m.ledger_conserved(),
        curves: m.curves,
    };
    Ok(serde_json::to_string(&out).expect("metrics serialize"))
}
