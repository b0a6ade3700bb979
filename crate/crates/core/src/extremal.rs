//! Private estimation of the extremal set: the coordinates at which `|θ|`
//! attains its maximum.
//!
//! The estimator looks for one large gap in the ordered `|U|` values with a
//! report-noisy-max over gap queries, then verifies the gap with
//! propose-test-release. Whenever the selected gap exceeds `4rL∞/n`, the
//! set of coordinates above it cannot change under a one-row replacement,
//! so the set itself can be released without further noise.

use std::cmp::Ordering;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log_cap;
use crate::privacy::{ptr_lower_bound, rl_gap, PrivacyBudget, Regularizer};
use crate::rng::{streams, Seed};
use crate::ustat::{gap_sensitivity, Kernel};

/// Differences of consecutive order statistics of `|U|`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapVector {
    /// `q[j] = |U|_(j+1) − |U|_(j+2)` (0-based), length `p − 1`.
    pub q: Vec<f64>,
    /// Coordinates sorted by `|U|` descending, ties by ascending index.
    pub order: Vec<usize>,
}

impl GapVector {
    /// The `k` coordinates with the largest `|U|`.
    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k]
    }
}

fn descending_order(u: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| {
        u[b].abs()
            .partial_cmp(&u[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

pub fn gaps(u: &[f64]) -> Result<GapVector> {
    clipped_gaps_inner(u, None)
}

/// Gaps of `max(|U|_(j), Δ)`: every gap below `Δ` is zero, so only
/// coordinates exceeding `Δ` can be separated.
pub fn clipped_gaps(u: &[f64], threshold: f64) -> Result<GapVector> {
    clipped_gaps_inner(u, Some(threshold))
}

fn clipped_gaps_inner(u: &[f64], clip: Option<f64>) -> Result<GapVector> {
    if u.len() < 2 {
        return Err(Error::param(format!("gap queries need p >= 2, got {}", u.len())));
    }
    let order = descending_order(u);
    let level = |i: usize| {
        let a = u[order[i]].abs();
        clip.map_or(a, |c| a.max(c))
    };
    let q = (0..u.len() - 1).map(|j| level(j) - level(j + 1)).collect();
    Ok(GapVector { q, order })
}

/// `{ i : |U_i| ≥ ‖U‖∞ − √(ln p · ln n / n) }`, the non-private estimate.
pub fn nonprivate_extremal(u: &[f64], n: usize) -> Vec<usize> {
    let p = u.len() as f64;
    let n = n as f64;
    let margin = (p.ln() * n.ln() / n).sqrt();
    let top = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (0..u.len()).filter(|&i| u[i].abs() >= top - margin).collect()
}

/// Either `⊥` (no separating gap verified) or a released index set.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtremalEstimate {
    Bottom,
    Set {
        /// 0-based coordinates, in decreasing order of `|U|` unless
        /// `truncated`, in which case they are a uniform random subset of
        /// the top `k_hat`.
        indices: Vec<usize>,
        k_hat: usize,
        truncated: bool,
    },
}

impl ExtremalEstimate {
    pub fn is_bottom(&self) -> bool {
        matches!(self, ExtremalEstimate::Bottom)
    }

    pub fn indices(&self) -> &[usize] {
        match self {
            ExtremalEstimate::Bottom => &[],
            ExtremalEstimate::Set { indices, .. } => indices,
        }
    }

    pub fn k_hat(&self) -> Option<usize> {
        match self {
            ExtremalEstimate::Bottom => None,
            ExtremalEstimate::Set { k_hat, .. } => Some(*k_hat),
        }
    }

    pub fn report(&self) -> ExtremalReport {
        match self {
            ExtremalEstimate::Bottom => ExtremalReport {
                outcome: "bottom".into(),
                indices: Vec::new(),
                k_hat: None,
                truncated: false,
            },
            ExtremalEstimate::Set {
                indices,
                k_hat,
                truncated,
            } => ExtremalReport {
                outcome: "set".into(),
                indices: indices.clone(),
                k_hat: Some(*k_hat),
                truncated: *truncated,
            },
        }
    }
}

/// Serialized form `{outcome, indices, kHat, truncated}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtremalReport {
    pub outcome: String,
    pub indices: Vec<usize>,
    pub k_hat: Option<usize>,
    pub truncated: bool,
}

impl TryFrom<ExtremalReport> for ExtremalEstimate {
    type Error = Error;

    fn try_from(r: ExtremalReport) -> Result<Self> {
        match (r.outcome.as_str(), r.k_hat) {
            ("bottom", _) => Ok(ExtremalEstimate::Bottom),
            ("set", Some(k_hat)) => Ok(ExtremalEstimate::Set {
                indices: r.indices,
                k_hat,
                truncated: r.truncated,
            }),
            (other, _) => Err(Error::Data(format!("bad extremal outcome `{other}`"))),
        }
    }
}

/// Runs the noisy-max selection and the PTR check on precomputed gaps.
///
/// `threshold` is both the gap-query sensitivity and the PTR threshold.
/// Charges `ρ` (half each step) and `δ`.
pub fn estimate_from_gaps(
    gaps: &GapVector,
    threshold: f64,
    rho: f64,
    delta: f64,
    regularizer: &Regularizer,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<ExtremalEstimate> {
    if !(rho > 0.0) {
        return Err(Error::param(format!("rho must be positive, got {rho}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    budget.check("extremal-set", rho, delta)?;

    let epsilon = 2.0 * rho.sqrt();
    let j = rl_gap(
        "extremal-set/gap-select",
        &gaps.q,
        epsilon,
        threshold,
        regularizer,
        budget,
        &mut seed.stream(streams::GAP_SELECT),
    )?;
    let check = ptr_lower_bound(
        "extremal-set/ptr",
        gaps.q[j],
        threshold,
        rho,
        delta,
        budget,
        &mut seed.stream(streams::PTR),
    )?;
    if !check.passed {
        return Ok(ExtremalEstimate::Bottom);
    }

    let k_hat = j + 1;
    let p = gaps.order.len();
    let cap = log_cap(p);
    let top = gaps.top(k_hat);
    if k_hat <= cap {
        return Ok(ExtremalEstimate::Set {
            indices: top.to_vec(),
            k_hat,
            truncated: false,
        });
    }
    let mut rng = seed.stream(streams::SUBSELECT);
    let mut picked: Vec<usize> = sample(&mut rng, k_hat, cap).into_iter().map(|i| top[i]).collect();
    picked.sort_unstable();
    Ok(ExtremalEstimate::Set {
        indices: picked,
        k_hat,
        truncated: true,
    })
}

/// Adaptive private estimate of the extremal set of `θ = E[U]`.
pub fn p_rel<K: Kernel + ?Sized>(
    u: &[f64],
    kernel: &K,
    n: usize,
    rho: f64,
    delta: f64,
    regularizer: &Regularizer,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<ExtremalEstimate> {
    let g = gaps(u)?;
    estimate_from_gaps(&g, gap_sensitivity(kernel, n), rho, delta, regularizer, budget, seed)
}

/// Private estimate of the relevant set `{ i : |θ_i| > Δ }` using gaps
/// clipped at `Δ`.
#[allow(clippy::too_many_arguments)]
pub fn relevant_set<K: Kernel + ?Sized>(
    u: &[f64],
    threshold: f64,
    kernel: &K,
    n: usize,
    rho: f64,
    delta: f64,
    regularizer: &Regularizer,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<ExtremalEstimate> {
    let g = clipped_gaps(u, threshold)?;
    estimate_from_gaps(&g, gap_sensitivity(kernel, n), rho, delta, regularizer, budget, seed)
}
