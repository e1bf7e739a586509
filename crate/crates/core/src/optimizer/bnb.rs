use std::cmp::Ordering;
use std::time::Duration;

use web_time::Instant;

use super::{BasketInstance, BasketSolution, OptimizerError, Proof};

/// Nodes between deadline checks.
const CLOCK_STRIDE: u64 = 1024;

/// Exact branch-and-bound over the selection variables.
///
/// Items are branched in descending value/cost order (ties by index),
/// include-branch first. A node's bound is the fractional-knapsack value of
/// the remaining positive-value items plus every positive synergy that could
/// still be realized. If `time_limit` runs out, the incumbent is returned
/// with [`Proof::BoundGap`] against the root bound.
pub fn optimize_basket(inst: &BasketInstance, time_limit: Duration) -> Result<BasketSolution, OptimizerError> {
    inst.validate()?;
    let n = inst.n();
    if n == 0 {
        return Ok(BasketSolution::from_selection(inst, Vec::new(), Proof::Optimal));
    }

    let mut search = Search::new(inst, time_limit);
    let root_bound = search.bound(0);
    if time_limit.is_zero() {
        return Ok(BasketSolution::from_selection(
            inst,
            Vec::new(),
            Proof::BoundGap(root_bound.max(0)),
        ));
    }
    search.warm_start();
    search.dfs(0);

    let selected: Vec<usize> = (0..n).filter(|&i| search.best_set[i]).collect();
    let proof = if search.timed_out {
        Proof::BoundGap((root_bound - search.best_value).max(0))
    } else {
        Proof::Optimal
    };
    Ok(BasketSolution::from_selection(inst, selected, proof))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Decision {
    Open,
    In,
    Out,
}

struct Search<'a> {
    inst: &'a BasketInstance,
    /// Branching order.
    order: Vec<usize>,
    /// Synergy pairs touching each item, as (other, s).
    adjacency: Vec<Vec<(usize, i64)>>,
    decision: Vec<Decision>,
    value: i64,
    spend: i64,
    best_value: i64,
    best_set: Vec<bool>,
    deadline: Instant,
    nodes: u64,
    timed_out: bool,
}

impl<'a> Search<'a> {
    fn new(inst: &'a BasketInstance, time_limit: Duration) -> Self {
        let n = inst.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| ratio_desc(inst, a, b).then(a.cmp(&b)));
        let mut adjacency = vec![Vec::new(); n];
        for (&(i, j), &s) in &inst.synergies {
            adjacency[i].push((j, s));
            adjacency[j].push((i, s));
        }
        let start = Instant::now();
        Self {
            inst,
            order,
            adjacency,
            decision: vec![Decision::Open; n],
            value: 0,
            spend: 0,
            best_value: 0,
            best_set: vec![false; n],
            deadline: start.checked_add(time_limit).unwrap_or(start + Duration::from_secs(86_400 * 365)),
            nodes: 0,
            timed_out: false,
        }
    }

    /// Upper bound on any completion of the current partial assignment,
    /// where items order[depth..] are still open.
    fn bound(&self, depth: usize) -> i64 {
        let inst = self.inst;
        let mut cap = inst.budget - self.spend;
        let mut total = self.value;
        for &i in &self.order[depth..] {
            let (v, c) = (inst.values[i], inst.costs[i]);
            if v <= 0 {
                // order is by ratio, so the rest are non-positive too
                break;
            }
            if c <= cap {
                cap -= c;
                total += v;
            } else {
                // ceil(v * cap / c)
                let num = v as i128 * cap as i128;
                total += ((num + c as i128 - 1) / c as i128) as i64;
                break;
            }
        }
        for (&(i, j), &s) in &inst.synergies {
            if s <= 0 {
                continue;
            }
            let (di, dj) = (self.decision[i], self.decision[j]);
            let realizable = di != Decision::Out && dj != Decision::Out;
            let open = di == Decision::Open || dj == Decision::Open;
            if realizable && open {
                total += s;
            }
        }
        total
    }

    /// Gain from adding `i` to the current selection.
    fn marginal(&self, i: usize) -> i64 {
        self.inst.values[i]
            + self.adjacency[i]
                .iter()
                .filter(|(o, _)| self.decision[*o] == Decision::In)
                .map(|(_, s)| *s)
                .sum::<i64>()
    }

    /// Greedy incumbent: walk the branching order, keep anything that fits
    /// and improves the objective.
    fn warm_start(&mut self) {
        let mut chosen = Vec::new();
        for k in 0..self.order.len() {
            let i = self.order[k];
            if self.spend + self.inst.costs[i] <= self.inst.budget && self.marginal(i) > 0 {
                self.value += self.marginal(i);
                self.spend += self.inst.costs[i];
                self.decision[i] = Decision::In;
                chosen.push(i);
            }
        }
        if self.value > self.best_value {
            self.best_value = self.value;
            self.best_set = self.decision.iter().map(|d| *d == Decision::In).collect();
        }
        for i in chosen {
            self.decision[i] = Decision::Open;
        }
        self.value = 0;
        self.spend = 0;
    }

    fn dfs(&mut self, depth: usize) {
        if self.timed_out {
            return;
        }
        self.nodes += 1;
        if self.nodes % CLOCK_STRIDE == 0 && Instant::now() >= self.deadline {
            self.timed_out = true;
            return;
        }
        if self.value > self.best_value {
            self.best_value = self.value;
            self.best_set = self.decision.iter().map(|d| *d == Decision::In).collect();
        }
        if depth == self.order.len() || self.bound(depth) <= self.best_value {
            return;
        }
        let i = self.order[depth];
        let cost = self.inst.costs[i];

        if self.spend + cost <= self.inst.budget {
            let gain = self.marginal(i);
            self.decision[i] = Decision::In;
            self.value += gain;
            self.spend += cost;
            self.dfs(depth + 1);
            self.value -= gain;
            self.spend -= cost;
        }
        self.decision[i] = Decision::Out;
        self.dfs(depth + 1);
        self.decision[i] = Decision::Open;
    }
}

/// Descending v/c, compared exactly by cross-multiplication.
fn ratio_desc(inst: &BasketInstance, a: usize, b: usize) -> Ordering {
    let lhs = inst.values[a] as i128 * inst.costs[b] as i128;
    let rhs = inst.values[b] as i128 * inst.costs[a] as i128;
    rhs.cmp(&lhs)
}
