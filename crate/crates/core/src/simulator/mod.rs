//! Agent-based sessions against a real [`Exchange`](crate::Exchange).
//!
//! One asset, a ladder of threshold markets, and four agent classes (see
//! [`agents`]). Rounds are timestamps 0..rounds; every market's cutoff is
//! `rounds`, so the session ends by halting and settling the ladder at the
//! final true price.

pub mod agents;
mod config;
mod metrics;
mod session;

pub use config::{ladder, PerClass, SimConfig, DEFAULT_LADDER};
pub use metrics::{ArbitrageWindow, ClassPnl, ManipulationReport, ShockMetrics, SimMetrics};
pub use session::{manipulation_experiment, run_session, shock_session};

use crate::exchange::ExchangeError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("shock round {shock_round} must be in 1..{rounds}")]
    ShockRound { shock_round: u32, rounds: u32 },
    #[error("invariant violated in round {round}: {message}")]
    Invariant { round: u32, message: String },
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
}
