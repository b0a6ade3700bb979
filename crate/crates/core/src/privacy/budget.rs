use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack for floating-point splits such as `ρ/3 + ρ/3 + ρ/3`.
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub mechanism: String,
    pub rho: f64,
    pub delta: f64,
}

/// A declared `δ`-approximate `ρ`-zCDP budget and the append-only record of
/// what has been spent. Composition is linear in both `ρ` and `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    rho: f64,
    delta: f64,
    ledger: Vec<LedgerEntry>,
}

impl PrivacyBudget {
    pub fn new(rho: f64, delta: f64) -> Result<Self> {
        if !(rho >= 0.0) || rho.is_nan() {
            return Err(Error::param(format!("rho must be nonnegative, got {rho}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::param(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(Self {
            rho,
            delta,
            ledger: Vec::new(),
        })
    }

    /// A budget that never runs out, for non-private reference runs.
    pub fn unlimited() -> Self {
        Self {
            rho: f64::INFINITY,
            delta: f64::INFINITY,
            ledger: Vec::new(),
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn spent(&self) -> (f64, f64) {
        self.ledger
            .iter()
            .fold((0.0, 0.0), |(r, d), e| (r + e.rho, d + e.delta))
    }

    pub fn remaining(&self) -> (f64, f64) {
        let (r, d) = self.spent();
        ((self.rho - r).max(0.0), (self.delta - d).max(0.0))
    }

    /// Checks that a charge would fit, without recording it.
    pub fn check(&self, mechanism: &str, rho: f64, delta: f64) -> Result<()> {
        if !(rho >= 0.0 && delta >= 0.0) {
            return Err(Error::param(format!(
                "negative charge ({rho}, {delta}) for `{mechanism}`"
            )));
        }
        let (spent_rho, spent_delta) = self.spent();
        let over_rho = spent_rho + rho > self.rho * (1.0 + SLACK);
        let over_delta = spent_delta + delta > self.delta * (1.0 + SLACK);
        if over_rho || over_delta {
            let (rr, dr) = self.remaining();
            return Err(Error::BudgetExhausted {
                mechanism: mechanism.to_string(),
                rho_requested: rho,
                delta_requested: delta,
                rho_remaining: rr,
                delta_remaining: dr,
            });
        }
        Ok(())
    }

    /// Records a charge, failing before anything is appended if it would
    /// overdraw the budget.
    pub fn spend(&mut self, mechanism: &str, rho: f64, delta: f64) -> Result<()> {
        self.check(mechanism, rho, delta)?;
        self.ledger.push(LedgerEntry {
            mechanism: mechanism.to_string(),
            rho,
            delta,
        });
        Ok(())
    }
}
