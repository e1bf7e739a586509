use serde::{Deserialize, Serialize};

use super::SimError;
use crate::types::{Cents, Outcome};

/// Per-class amounts in cents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerClass {
    pub informed: Cents,
    pub noise: Cents,
    pub manipulator: Cents,
    pub arbitrageur: Cents,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Ground-truth transfer price the session settles at.
    pub true_price: Cents,
    /// Ladder of thresholds on the single simulated asset, ascending.
    pub thresholds: Vec<Cents>,
    pub n_informed: usize,
    pub n_noise: usize,
    pub n_manipulators: usize,
    pub n_arbitrageurs: usize,
    pub signal_noise_sigma: Cents,
    pub rounds: u32,
    /// Scrip credited to each agent of a class.
    pub budgets: PerClass,
    /// Most an agent of a class spends in one trade.
    pub round_spend: PerClass,
    pub b: f64,
    pub wager_cap: Cents,
    pub manipulation_target: Outcome,
    /// Slack before a ladder inversion counts as an arbitrage violation.
    pub arbitrage_epsilon: f64,
    /// Audit exchange invariants after every round (settlement is always audited).
    pub check_invariants: bool,
}

/// Default ladder multipliers around the true price.
pub const DEFAULT_LADDER: [f64; 5] = [0.8, 0.9, 1.1, 1.2, 1.3];

impl Default for PerClass {
    fn default() -> Self {
        Self {
            informed: Cents::from_euros(2_000),
            noise: Cents::from_euros(500),
            // Enough to reach the wager cap on every rung of the default ladder.
            manipulator: Cents::from_euros(5_000),
            arbitrageur: Cents::from_euros(1_000),
        }
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        let true_price = Cents::from_euros(250_000);
        Self {
            seed: 0,
            true_price,
            thresholds: ladder(true_price, &DEFAULT_LADDER),
            n_informed: 50,
            n_noise: 10,
            n_manipulators: 0,
            n_arbitrageurs: 1,
            signal_noise_sigma: Cents(true_price.0 / 20),
            rounds: 200,
            budgets: PerClass::default(),
            round_spend: PerClass {
                informed: Cents::from_euros(10),
                noise: Cents::from_euros(1),
                manipulator: Cents::from_euros(100),
                arbitrageur: Cents::from_euros(50),
            },
            b: 100.0,
            wager_cap: Cents::from_euros(1_000),
            manipulation_target: Outcome::Higher,
            arbitrage_epsilon: 0.01,
            check_invariants: true,
        }
    }
}

/// Thresholds at `price * m` for each multiplier, rounded to whole euros.
pub fn ladder(price: Cents, multipliers: &[f64]) -> Vec<Cents> {
    multipliers
        .iter()
        .map(|m| Cents::from_euros((price.to_euro() * m).round() as i64))
        .collect()
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.rounds < 1 {
            return bad("rounds must be at least 1".into());
        }
        if !self.true_price.is_positive() {
            return bad(format!("true_price must be positive, got {}", self.true_price.0));
        }
        if self.signal_noise_sigma.0 < 0 {
            return bad("signal_noise_sigma must not be negative".into());
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return bad(format!("b must be positive, got {}", self.b));
        }
        if self.thresholds.is_empty() {
            return bad("at least one threshold is required".into());
        }
        if self.thresholds.iter().any(|t| !t.is_positive()) {
            return bad("thresholds must be positive".into());
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return bad("thresholds must be strictly ascending".into());
        }
        for (name, v) in [
            ("budgets.informed", self.budgets.informed),
            ("budgets.noise", self.budgets.noise),
            ("budgets.manipulator", self.budgets.manipulator),
            ("budgets.arbitrageur", self.budgets.arbitrageur),
            ("round_spend.informed", self.round_spend.informed),
            ("round_spend.noise", self.round_spend.noise),
            ("round_spend.manipulator", self.round_spend.manipulator),
            ("round_spend.arbitrageur", self.round_spend.arbitrageur),
            ("wager_cap", self.wager_cap),
        ] {
            if v.0 < 0 {
                return bad(format!("{name} must not be negative"));
            }
        }
        if !(self.arbitrage_epsilon.is_finite() && self.arbitrage_epsilon >= 0.0) {
            return bad("arbitrage_epsilon must be a non-negative number".into());
        }
        Ok(())
    }
}
