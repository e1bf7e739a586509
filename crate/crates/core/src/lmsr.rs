//! Logarithmic market scoring rule over `k` mutually exclusive outcomes.
//!
//! - cost:  C(q) = b * ln(sum_j exp(q_j / b))
//! - price: p_i  = exp(q_i / b) / sum_j exp(q_j / b)
//! - buying `d` shares of outcome i costs C(q + d*e_i) - C(q)
//!
//! Amounts are euro; one winning share pays one euro. The maker's worst-case
//! loss is b * ln(k).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LmsrError {
    #[error("liquidity parameter b must be positive and finite, got {0}")]
    Liquidity(f64),
    #[error("need at least two outcomes, got {0}")]
    Outcomes(usize),
    #[error("outcome index {index} out of range for {len} outcomes")]
    OutcomeIndex { index: usize, len: usize },
    #[error("amount must be positive and finite, got {0}")]
    Amount(f64),
    #[error("target price {0} must lie strictly between 0 and 1")]
    TargetPrice(f64),
    #[error("quantity vector is not finite")]
    NonFinite,
}

/// Market-maker state: outstanding shares per outcome and liquidity `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmsrBook {
    q: Vec<f64>,
    b: f64,
}

impl LmsrBook {
    pub fn new(outcomes: usize, b: f64) -> Result<Self, LmsrError> {
        Self::with_quantities(vec![0.0; outcomes], b)
    }

    pub fn with_quantities(q: Vec<f64>, b: f64) -> Result<Self, LmsrError> {
        if !(b.is_finite() && b > 0.0) {
            return Err(LmsrError::Liquidity(b));
        }
        if q.len() < 2 {
            return Err(LmsrError::Outcomes(q.len()));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(LmsrError::NonFinite);
        }
        Ok(Self { q, b })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn quantities(&self) -> &[f64] {
        &self.q
    }

    pub fn outcomes(&self) -> usize {
        self.q.len()
    }

    /// Worst-case subsidy, b * ln(k).
    pub fn max_loss(&self) -> f64 {
        self.b * (self.q.len() as f64).ln()
    }

    fn check_index(&self, index: usize) -> Result<(), LmsrError> {
        if index >= self.q.len() {
            return Err(LmsrError::OutcomeIndex {
                index,
                len: self.q.len(),
            });
        }
        Ok(())
    }

    pub fn cost(&self) -> f64 {
        cost(&self.q, self.b)
    }

    pub fn prices(&self) -> Vec<f64> {
        let m = self.max_scaled();
        let w: Vec<f64> = self.q.iter().map(|x| (x / self.b - m).exp()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }

    pub fn price(&self, index: usize) -> Result<f64, LmsrError> {
        self.check_index(index)?;
        Ok(self.price_unchecked(index))
    }

    fn price_unchecked(&self, index: usize) -> f64 {
        let m = self.max_scaled();
        let s: f64 = self.q.iter().map(|x| (x / self.b - m).exp()).sum();
        (self.q[index] / self.b - m).exp() / s
    }

    fn max_scaled(&self) -> f64 {
        self.q
            .iter()
            .map(|x| x / self.b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cost in euro of buying `shares` of `index` at the current state.
    ///
    /// Uses C(q + d e_i) - C(q) = b ln(1 + p_i (exp(d/b) - 1)), which avoids
    /// cancellation between two large cost values.
    pub fn quote_buy(&self, index: usize, shares: f64) -> Result<f64, LmsrError> {
        self.check_index(index)?;
        if !(shares.is_finite() && shares > 0.0) {
            return Err(LmsrError::Amount(shares));
        }
        let p = self.price_unchecked(index);
        Ok(self.b * (p * (shares / self.b).exp_m1()).ln_1p())
    }

    /// Shares of `index` that cost exactly `spend` euro.
    ///
    /// Inverse of [`quote_buy`](Self::quote_buy):
    /// d = b ln(1 + (exp(spend/b) - 1) / p_i).
    pub fn shares_for_spend(&self, index: usize, spend: f64) -> Result<f64, LmsrError> {
        self.check_index(index)?;
        if !(spend.is_finite() && spend > 0.0) {
            return Err(LmsrError::Amount(spend));
        }
        let p = self.price_unchecked(index);
        let shares = self.b * ((spend / self.b).exp_m1() / p).ln_1p();
        if !shares.is_finite() {
            return Err(LmsrError::Amount(spend));
        }
        Ok(shares)
    }

    /// Euro needed to move the price of `index` up to `target`; zero if the
    /// price is already at or above it.
    pub fn spend_to_reach(&self, index: usize, target: f64) -> Result<f64, LmsrError> {
        self.check_index(index)?;
        if !(target > 0.0 && target < 1.0) {
            return Err(LmsrError::TargetPrice(target));
        }
        let p = self.price_unchecked(index);
        if p >= target {
            return Ok(0.0);
        }
        // Buying only i scales the other outcomes' total mass by a constant,
        // so the cost is b ln((1 - p) / (1 - target)).
        Ok(self.b * ((1.0 - p) / (1.0 - target)).ln())
    }

    /// Adds `shares` to outcome `index`.
    pub fn apply(&mut self, index: usize, shares: f64) -> Result<(), LmsrError> {
        self.check_index(index)?;
        if !(shares.is_finite() && shares > 0.0) {
            return Err(LmsrError::Amount(shares));
        }
        self.q[index] += shares;
        Ok(())
    }
}

/// C(q) = b ln(sum exp(q_j / b)), evaluated with max subtraction.
pub fn cost(q: &[f64], b: f64) -> f64 {
    let m = q.iter().map(|x| x / b).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = q.iter().map(|x| (x / b - m).exp()).sum();
    b * (m + s.ln())
}
