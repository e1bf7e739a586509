use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::exchange::LedgerTotals;
use crate::types::Cents;

/// Net settlement result per agent class: final balances minus credits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassPnl {
    pub informed: Cents,
    pub noise: Cents,
    pub manipulator: Cents,
    pub arbitrageur: Cents,
}

/// A stretch of rounds during which one adjacent pair stayed inverted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArbitrageWindow {
    /// Lower index of the inverted pair (index, index + 1).
    pub index: usize,
    /// First round whose closing curve showed the violation.
    pub open_round: u32,
    /// First later round whose closing curve no longer showed it.
    pub close_round: Option<u32>,
}

impl ArbitrageWindow {
    /// Rounds the violation survived; open windows count up to `rounds`.
    pub fn length(&self, rounds: u32) -> u32 {
        self.close_round.unwrap_or(rounds) - self.open_round
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockMetrics {
    pub shock_round: u32,
    pub old_price: Cents,
    pub new_price: Cents,
    /// Thresholds strictly between the old and new price.
    pub straddled: Vec<usize>,
    /// HIGHER price per threshold at the close of the round before the shock.
    pub pre_shock: Vec<f64>,
    /// Per threshold; `None` where the threshold is not straddled.
    pub half_lives: Vec<Option<u32>>,
    /// Slowest straddled threshold; 0 when nothing is straddled.
    pub half_life: u32,
    /// Final minus pre-shock price, per threshold.
    pub drift: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub seed: u64,
    pub thresholds: Vec<Cents>,
    /// HIGHER price per threshold at the close of each round.
    pub curves: Vec<Vec<f64>>,
    /// Price the session settled at.
    pub settlement_price: Cents,
    /// |P(>t) - 1{settlement_price > t}| per threshold at the final round.
    pub final_errors: Vec<f64>,
    pub arbitrage_windows: Vec<ArbitrageWindow>,
    pub shock: Option<ShockMetrics>,
    pub pnl: ClassPnl,
    pub trades: usize,
    pub ledger: LedgerTotals,
    /// Sum of balances after settlement.
    pub balances: Cents,
}

impl SimMetrics {
    pub fn rounds(&self) -> u32 {
        self.curves.len() as u32
    }

    pub fn final_prices(&self) -> &[f64] {
        self.curves.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Whether the post-settlement ledger identity holds.
    pub fn ledger_conserved(&self) -> bool {
        self.balances + self.ledger.maker_take - self.ledger.payouts == self.ledger.credits_issued
    }

    pub fn longest_arbitrage_window(&self) -> u32 {
        let rounds = self.rounds();
        self.arbitrage_windows
            .iter()
            .map(|w| w.length(rounds))
            .max()
            .unwrap_or(0)
    }

    /// `round,threshold_cents,p_higher` lines followed by a summary block.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "round,threshold_cents,p_higher")?;
        for (r, curve) in self.curves.iter().enumerate() {
            for (t, p) in self.thresholds.iter().zip(curve) {
                writeln!(out, "{r},{},{p:.9}", t.0)?;
            }
        }
        writeln!(out)?;
        writeln!(out, "# summary")?;
        writeln!(out, "seed,{}", self.seed)?;
        writeln!(out, "settlement_price_cents,{}", self.settlement_price.0)?;
        for (t, e) in self.thresholds.iter().zip(&self.final_errors) {
            writeln!(out, "final_error,{},{e:.9}", t.0)?;
        }
        if let Some(s) = &self.shock {
            writeln!(out, "shock_round,{}", s.shock_round)?;
            writeln!(out, "half_life_rounds,{}", s.half_life)?;
            for &i in &s.straddled {
                writeln!(out, "drift,{},{:.9}", self.thresholds[i].0, s.drift[i])?;
            }
        }
        writeln!(out, "arbitrage_windows,{}", self.arbitrage_windows.len())?;
        writeln!(out, "longest_arbitrage_window_rounds,{}", self.longest_arbitrage_window())?;
        writeln!(out, "trades,{}", self.trades)?;
        writeln!(out, "pnl_informed_cents,{}", self.pnl.informed.0)?;
        writeln!(out, "pnl_noise_cents,{}", self.pnl.noise.0)?;
        writeln!(out, "pnl_manipulator_cents,{}", self.pnl.manipulator.0)?;
        writeln!(out, "pnl_arbitrageur_cents,{}", self.pnl.arbitrageur.0)?;
        writeln!(out, "ledger_conserved,{}", self.ledger_conserved())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManipulationReport {
    pub baseline: SimMetrics,
    pub treatment: SimMetrics,
    /// |treatment - baseline| final HIGHER price per threshold.
    pub displacement: Vec<f64>,
    /// Manipulators' combined result after settlement; negative is a loss.
    pub manipulator_profit: Cents,
}

impl ManipulationReport {
    pub fn mean_displacement(&self) -> f64 {
        if self.displacement.is_empty() {
            return 0.0;
        }
        self.displacement.iter().sum::<f64>() / self.displacement.len() as f64
    }

    pub fn write_summary<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# manipulation")?;
        for (t, d) in self.baseline.thresholds.iter().zip(&self.displacement) {
            writeln!(out, "displacement,{},{d:.9}", t.0)?;
        }
        writeln!(out, "mean_displacement,{:.9}", self.mean_displacement())?;
        writeln!(out, "manipulator_profit_cents,{}", self.manipulator_profit.0)
    }
}
