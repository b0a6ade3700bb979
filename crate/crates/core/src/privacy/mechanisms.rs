use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::budget::PrivacyBudget;
use crate::error::{Error, Result};

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Draw from `Gumbel(0, scale)` by inverting the CDF `exp(−exp(−x/scale))`.
pub fn sample_gumbel<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -scale * (-u.ln()).ln()
}

/// The `(1 − α)`-quantile of `Gumbel(0, scale)`.
pub fn gumbel_quantile(alpha: f64, scale: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(scale > 0.0) {
        return Err(Error::param(format!("Gumbel scale must be positive, got {scale}")));
    }
    Ok(-scale * (-(1.0 - alpha).ln()).ln())
}

/// `ε = ρ + 2√(ρ ln(1/δ))`, the standard zCDP to `(ε, δ)`-DP conversion.
pub fn zcdp_to_eps_delta(rho: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(rho >= 0.0) {
        return Err(Error::param(format!("rho must be nonnegative, got {rho}")));
    }
    Ok(rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt())
}

/// Output of a noise mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyRelease {
    pub value: Vec<f64>,
    pub sigma: f64,
    pub mechanism: String,
}

impl NoisyRelease {
    /// The first (for scalar releases, only) coordinate.
    pub fn scalar(&self) -> f64 {
        self.value[0]
    }
}

/// Gaussian mechanism with noise `N(0, (Δ₂/√(2ρ))²)` per coordinate;
/// `ρ`-zCDP. `ρ = ∞` gives the noiseless limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMechanism {
    sensitivity: f64,
    rho: f64,
}

impl GaussianMechanism {
    pub fn new(l2_sensitivity: f64, rho: f64) -> Result<Self> {
        if !(l2_sensitivity > 0.0 && l2_sensitivity.is_finite()) {
            return Err(Error::param(format!(
                "sensitivity must be positive and finite, got {l2_sensitivity}"
            )));
        }
        if !(rho > 0.0) {
            return Err(Error::param(format!("rho must be positive, got {rho}")));
        }
        Ok(Self {
            sensitivity: l2_sensitivity,
            rho,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn sigma(&self) -> f64 {
        if self.rho.is_infinite() {
            0.0
        } else {
            self.sensitivity / (2.0 * self.rho).sqrt()
        }
    }

    /// Adds noise without touching a budget; only for values that are
    /// already post-processing of released quantities (synthetic draws).
    pub fn perturb<R: Rng + ?Sized>(&self, values: &mut [f64], rng: &mut R) {
        let sigma = self.sigma();
        for v in values.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += sigma * z;
        }
    }

    /// Releases a statistic computed on sensitive data, debiting `ρ`.
    pub fn release<R: Rng + ?Sized>(
        &self,
        label: &str,
        values: &[f64],
        budget: &mut PrivacyBudget,
        rng: &mut R,
    ) -> Result<NoisyRelease> {
        budget.spend(label, self.rho, 0.0)?;
        let mut value = values.to_vec();
        self.perturb(&mut value, rng);
        Ok(NoisyRelease {
            value,
            sigma: self.sigma(),
            mechanism: label.to_string(),
        })
    }
}

pub fn gaussian_mechanism<R: Rng + ?Sized>(
    values: &[f64],
    l2_sensitivity: f64,
    rho: f64,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<NoisyRelease> {
    GaussianMechanism::new(l2_sensitivity, rho)?.release("gaussian", values, budget, rng)
}

/// Index prior `ν` added to each query before the noisy argmax.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum Regularizer {
    #[default]
    None,
    /// `ν(j) = c (1 − j/n)` for 1-based `j`; favours earlier indices.
    Linear { c: f64, n: usize },
    Values(Vec<f64>),
}

impl Regularizer {
    pub fn weight(&self, index: usize) -> f64 {
        match self {
            Regularizer::None => 0.0,
            Regularizer::Linear { c, n } => c * (1.0 - (index + 1) as f64 / *n as f64),
            Regularizer::Values(v) => v.get(index).copied().unwrap_or(0.0),
        }
    }
}

/// Regularized report-noisy-max: `argmax_j { q_j + ν(j) + Gumbel(2Δ₁/ε) }`.
///
/// `ε²/8`-zCDP; the charge is recorded under `label`. Returns a 0-based
/// index; exact ties go to the smallest index.
pub fn rl_gap<R: Rng + ?Sized>(
    label: &str,
    q: &[f64],
    epsilon: f64,
    l1_sensitivity: f64,
    regularizer: &Regularizer,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<usize> {
    if q.is_empty() {
        return Err(Error::param("report-noisy-max needs a nonempty query vector"));
    }
    if !(epsilon > 0.0) || !(l1_sensitivity > 0.0) {
        return Err(Error::param(format!(
            "epsilon and sensitivity must be positive (got {epsilon}, {l1_sensitivity})"
        )));
    }
    budget.spend(label, epsilon * epsilon / 8.0, 0.0)?;
    let scale = 2.0 * l1_sensitivity / epsilon;
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (j, &qj) in q.iter().enumerate() {
        let noise = if scale > 0.0 { sample_gumbel(scale, rng) } else { 0.0 };
        let v = qj + regularizer.weight(j) + noise;
        if v > best_val {
            best_val = v;
            best = j;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtrOutcome {
    pub passed: bool,
    pub q_hat: f64,
    pub sigma: f64,
}

/// Propose-test-release check that a query with sensitivity `t` clears `t`.
///
/// `q̂ = q + N(0, σ²) − σ z_{1−δ}` with `σ = t/√ρ`, so `P(q̂ > q) ≤ δ`.
/// Charges `ρ/2` and `δ`.
pub fn ptr_lower_bound<R: Rng + ?Sized>(
    label: &str,
    q_value: f64,
    t: f64,
    rho: f64,
    delta: f64,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<PtrOutcome> {
    if !(rho > 0.0) {
        return Err(Error::param(format!("rho must be positive, got {rho}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(t > 0.0) {
        return Err(Error::param(format!("threshold must be positive, got {t}")));
    }
    budget.spend(label, rho / 2.0, delta)?;
    let sigma = if rho.is_infinite() { 0.0 } else { t / rho.sqrt() };
    let q_hat = if sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        q_value + sigma * z - sigma * normal_quantile(1.0 - delta)
    } else {
        q_value
    };
    Ok(PtrOutcome {
        passed: q_hat > t,
        q_hat,
        sigma,
    })
}
