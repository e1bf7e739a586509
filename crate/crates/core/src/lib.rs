//! Core engine for a prediction market on impaired-asset transfer prices.
//!
//! Binary HIGHER/LOWER markets on an asset's announced transfer price are
//! priced by a logarithmic scoring-rule market maker. The crate also carries
//! the settlement and ladder-audit logic, two-asset joint markets, a basket
//! optimizer for budget-constrained acquisition with pairwise synergies, and
//! an agent-based simulator used to check aggregation and manipulation
//! resistance empirically.

pub mod combinatorial;
pub mod config;
pub mod exchange;
pub mod geo;
pub mod lmsr;
pub mod optimizer;
pub mod registry;
pub mod settlement;
pub mod simulator;
pub mod types;

pub use config::ExchangeConfig;
pub use exchange::{Exchange, ExchangeError};
pub use registry::{Asset, AssetRegistry, AssetStatus};
pub use types::{AccountId, AssetId, Cents, MarketId, Outcome, Timestamp, TradeId};
