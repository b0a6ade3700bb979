//! Generalized sparse vector technique with Gaussian noise, kept as a
//! baseline for extremal-set estimation, and its privacy-cost bound.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ustat::ln_binomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SvtAnswer {
    Above,
    Below,
}

/// Noisy threshold `t + N(0, σ₁²)` drawn once; each query gets `N(0, σ₂²)`.
/// Stops after `cutoff` answers above the threshold or `max_len` queries.
pub fn svt_run<I, R>(
    queries: I,
    threshold: f64,
    sigma1: f64,
    sigma2: f64,
    cutoff: usize,
    max_len: usize,
    rng: &mut R,
) -> Result<Vec<SvtAnswer>>
where
    I: IntoIterator<Item = f64>,
    R: Rng + ?Sized,
{
    if cutoff == 0 {
        return Err(Error::param("SVT cutoff must be at least 1"));
    }
    if !(sigma1 >= 0.0 && sigma2 >= 0.0) {
        return Err(Error::param("SVT noise scales must be nonnegative"));
    }
    let z: f64 = rng.sample(StandardNormal);
    let noisy_threshold = threshold + sigma1 * z;
    let mut answers = Vec::new();
    let mut hits = 0;
    for q in queries.into_iter().take(max_len) {
        let z: f64 = rng.sample(StandardNormal);
        if q + sigma2 * z >= noisy_threshold {
            answers.push(SvtAnswer::Above);
            hits += 1;
            if hits >= cutoff {
                break;
            }
        } else {
            answers.push(SvtAnswer::Below);
        }
    }
    Ok(answers)
}

/// How a non-integer cutoff `c = ln p` enters the binomial `C(p, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffConvention {
    /// `c = ln p`, binomial continued through the gamma function.
    Continuous,
    /// `c = ⌈ln p⌉`.
    Ceiling,
}

impl CutoffConvention {
    pub fn cutoff(self, p: u64) -> f64 {
        let c = (p as f64).ln();
        match self {
            CutoffConvention::Continuous => c,
            CutoffConvention::Ceiling => c.ceil(),
        }
    }
}

/// Upper bound on `ε(δ)` for the Gaussian SVT answering `c` queries above
/// threshold out of `p`:
///
/// `a + √(2a (ln δ⁻¹ + ln(c·C(p, c))))` with `a = Δ²/(2σ₁²) + 2cΔ²/σ₂²`.
pub fn svt_epsilon_bound(
    sensitivity: f64,
    sigma1: f64,
    sigma2: f64,
    c: f64,
    p: u64,
    delta: f64,
) -> Result<f64> {
    if !(sensitivity > 0.0 && sigma1 > 0.0 && sigma2 > 0.0 && c > 0.0) {
        return Err(Error::param("SVT bound needs positive sensitivity, noise and cutoff"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    if c > p as f64 {
        return Err(Error::param(format!("cutoff {c} exceeds the number of queries {p}")));
    }
    let d2 = sensitivity * sensitivity;
    let a = d2 / (2.0 * sigma1 * sigma1) + 2.0 * c * d2 / (sigma2 * sigma2);
    let log_term = (1.0 / delta).ln() + c.ln() + ln_binomial(p as f64, c);
    Ok(a + (2.0 * a * log_term).sqrt())
}
