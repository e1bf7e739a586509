//! Agent behaviour rules. Deliberately simple; each class is one rule.
//!
//! * Informed: one signal `true_price + N(0, sigma)`. Belief that the price
//!   exceeds `t` is `Phi((signal - t) / sigma)`, clamped to [0.01, 0.99]. Each
//!   round, for every threshold, buys the side its signal favours until the
//!   price reaches its belief, at most one `round_spend` per threshold.
//! * Noise: one trade per round on a uniformly random market and side, with a
//!   uniform spend in [1 cent, round_spend].
//! * Manipulator: each round, pushes the target side on the market where that
//!   side is cheapest, spending its full per-round allowance.
//! * Arbitrageur: repeatedly takes the widest ladder inversion and trades the
//!   riskless bundle (HIGHER below, LOWER above) until both legs meet at the
//!   pair's midpoint.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::types::{AccountId, Cents};

pub const BELIEF_FLOOR: f64 = 0.01;
pub const BELIEF_CEIL: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Informed,
    Noise,
    Manipulator,
    Arbitrageur,
}

impl Role {
    fn prefix(self) -> &'static str {
        match self {
            Role::Informed => "inf",
            Role::Noise => "noise",
            Role::Manipulator => "manip",
            Role::Arbitrageur => "arb",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Agent {
    pub role: Role,
    pub account: AccountId,
    /// Informed agents only, in cents.
    pub signal: f64,
    /// Private stream; only noise traders draw from it.
    pub rng: ChaCha8Rng,
    pub credited: Cents,
}

impl Agent {
    pub fn new(role: Role, n: usize, rng: ChaCha8Rng) -> Self {
        Self {
            role,
            account: AccountId(format!("{}-{n:03}", role.prefix())),
            signal: 0.0,
            rng,
            credited: Cents::ZERO,
        }
    }

    /// Market index, buy-HIGHER flag and desired spend for a noise trade.
    /// Always draws the same three values so paired runs stay in step.
    pub fn noise_draw(&mut self, markets: usize, max_spend: Cents) -> (usize, bool, Cents) {
        let market = self.rng.random_range(0..markets);
        let higher = self.rng.random_bool(0.5);
        let u: f64 = self.rng.random();
        let spend = 1 + (u * max_spend.0 as f64) as i64;
        (market, higher, Cents(spend.min(max_spend.0)))
    }
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Informed belief that the transfer price exceeds `threshold`.
pub fn belief_higher(signal: f64, threshold: f64, sigma: f64) -> f64 {
    let raw = if sigma > 0.0 {
        phi((signal - threshold) / sigma)
    } else if signal > threshold {
        1.0
    } else {
        0.0
    };
    raw.clamp(BELIEF_FLOOR, BELIEF_CEIL)
}
