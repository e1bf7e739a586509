//! Budget-constrained basket selection with pairwise synergies.
//!
//! maximize   sum v_i x_i + sum_{i<j} s_ij x_i x_j
//! subject to sum c_i x_i <= B,  x binary
//!
//! All arithmetic is integer cents. [`optimize_basket`] is an exact
//! branch-and-bound; [`brute_force_basket`] enumerates every subset and is
//! kept as the verification oracle for small instances.

mod bnb;
mod brute;
mod model;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use bnb::optimize_basket;
pub use brute::{brute_force_basket, BRUTE_FORCE_MAX_N};
pub use model::{build_model, Constraint, LinearModel, VarKind, Variable};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OptimizerError {
    #[error("instance has {values} values but {costs} costs")]
    Length { values: usize, costs: usize },
    #[error("cost of asset {index} must be positive, got {cost}")]
    NonPositiveCost { index: usize, cost: i64 },
    #[error("negative budget {0}")]
    NegativeBudget(i64),
    #[error("synergy pair ({0}, {1}) is a self-pair")]
    SelfPair(usize, usize),
    #[error("synergy pair ({0}, {1}) references an asset out of range")]
    PairOutOfRange(usize, usize),
    #[error("synergy pair ({0}, {1}) given twice")]
    DuplicatePair(usize, usize),
    #[error("brute force refused: n = {0} exceeds {max}", max = BRUTE_FORCE_MAX_N)]
    TooLarge(usize),
    #[error("instance file line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasketInstance {
    /// Stand-alone value per asset, cents.
    pub values: Vec<i64>,
    /// Acquisition cost per asset, cents, positive.
    pub costs: Vec<i64>,
    /// Unordered pairs stored as (i, j) with i < j.
    pub synergies: BTreeMap<(usize, usize), i64>,
    pub budget: i64,
}

impl BasketInstance {
    pub fn new(values: Vec<i64>, costs: Vec<i64>, budget: i64) -> Self {
        Self {
            values,
            costs,
            synergies: BTreeMap::new(),
            budget,
        }
    }

    /// Adds synergy `s` between `i` and `j`, in either order.
    pub fn with_synergy(mut self, i: usize, j: usize, s: i64) -> Result<Self, OptimizerError> {
        self.add_synergy(i, j, s)?;
        Ok(self)
    }

    pub fn add_synergy(&mut self, i: usize, j: usize, s: i64) -> Result<(), OptimizerError> {
        if i == j {
            return Err(OptimizerError::SelfPair(i, j));
        }
        let key = (i.min(j), i.max(j));
        if self.synergies.contains_key(&key) {
            return Err(OptimizerError::DuplicatePair(key.0, key.1));
        }
        self.synergies.insert(key, s);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.values.len() != self.costs.len() {
            return Err(OptimizerError::Length {
                values: self.values.len(),
                costs: self.costs.len(),
            });
        }
        if let Some((index, &cost)) = self.costs.iter().enumerate().find(|(_, c)| **c <= 0) {
            return Err(OptimizerError::NonPositiveCost { index, cost });
        }
        if self.budget < 0 {
            return Err(OptimizerError::NegativeBudget(self.budget));
        }
        for &(i, j) in self.synergies.keys() {
            if i == j {
                return Err(OptimizerError::SelfPair(i, j));
            }
            if i > j {
                // keys must be normalized; a reversed key could shadow its twin
                return Err(OptimizerError::DuplicatePair(j, i));
            }
            if j >= self.n() {
                return Err(OptimizerError::PairOutOfRange(i, j));
            }
        }
        Ok(())
    }

    /// Objective of a selection given as sorted, distinct indices.
    pub fn objective(&self, selected: &[usize]) -> i64 {
        let mut in_set = vec![false; self.n()];
        for &i in selected {
            in_set[i] = true;
        }
        let base: i64 = selected.iter().map(|&i| self.values[i]).sum();
        let syn: i64 = self
            .synergies
            .iter()
            .filter(|((i, j), _)| in_set[*i] && in_set[*j])
            .map(|(_, s)| *s)
            .sum();
        base + syn
    }

    pub fn spend(&self, selected: &[usize]) -> i64 {
        selected.iter().map(|&i| self.costs[i]).sum()
    }

    /// Parses the instance file: `n,budget_cents`, then `n` lines
    /// `i,value_cents,cost_cents` in index order, then any number of
    /// `i,j,synergy_cents` pair lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, OptimizerError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .peekable();

        if let Some((_, l)) = lines.peek() {
            if l.replace(' ', "") == "n,budget_cents" {
                lines.next();
            }
        }
        let (line, header) = lines.next().ok_or(OptimizerError::Parse {
            line: 0,
            reason: "missing `n,budget_cents` header".into(),
        })?;
        let [n, budget] = parse_fields::<2>(line, header)?;
        let n = usize::try_from(n).map_err(|_| OptimizerError::Parse {
            line,
            reason: format!("n must be non-negative, got {n}"),
        })?;

        let mut inst = BasketInstance::new(Vec::with_capacity(n), Vec::with_capacity(n), budget);
        for expected in 0..n {
            let (line, l) = lines.next().ok_or(OptimizerError::Parse {
                line: 0,
                reason: format!("expected {n} asset lines, found {expected}"),
            })?;
            let [i, v, c] = parse_fields::<3>(line, l)?;
            if i != expected as i64 {
                return Err(OptimizerError::Parse {
                    line,
                    reason: format!("expected asset index {expected}, got {i}"),
                });
            }
            inst.values.push(v);
            inst.costs.push(c);
        }
        for (line, l) in lines {
            let [i, j, s] = parse_fields::<3>(line, l)?;
            if i < 0 || j < 0 || i as usize >= n || j as usize >= n {
                return Err(OptimizerError::PairOutOfRange(i.max(0) as usize, j.max(0) as usize));
            }
            inst.add_synergy(i as usize, j as usize, s)?;
        }
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{},{}\n", self.n(), self.budget);
        for i in 0..self.n() {
            let _ = writeln!(out, "{i},{},{}", self.values[i], self.costs[i]);
        }
        for ((i, j), s) in &self.synergies {
            let _ = writeln!(out, "{i},{j},{s}");
        }
        out
    }
}

fn parse_fields<const K: usize>(line: usize, text: &str) -> Result<[i64; K], OptimizerError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != K {
        return Err(OptimizerError::Parse {
            line,
            reason: format!("expected {K} fields, found {}", parts.len()),
        });
    }
    let mut out = [0i64; K];
    for (slot, raw) in out.iter_mut().zip(parts) {
        *slot = raw.parse().map_err(|_| OptimizerError::Parse {
            line,
            reason: format!("`{raw}` is not an integer"),
        })?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "gap", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Proof {
    Optimal,
    /// Search stopped early; the true optimum is at most incumbent + gap.
    BoundGap(i64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasketSolution {
    /// Sorted asset indices.
    pub selected: Vec<usize>,
    pub objective: i64,
    pub spend: i64,
    pub proof: Proof,
}

impl BasketSolution {
    pub(crate) fn from_selection(inst: &BasketInstance, mut selected: Vec<usize>, proof: Proof) -> Self {
        selected.sort_unstable();
        Self {
            objective: inst.objective(&selected),
            spend: inst.spend(&selected),
            selected,
            proof,
        }
    }
}
