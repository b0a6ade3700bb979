//! Tests of the relevant hypothesis `H₀(Δ): ‖θ‖∞ ≤ Δ`.
//!
//! Every test first *releases* a few private quantities (a noisy `‖U‖∞`,
//! possibly an extremal set and a noisy covariance, and a critical value
//! derived from them) and then *decides* by comparing them with `Δ`.
//! Releases never depend on `Δ`, so a whole grid of thresholds can be
//! decided from a single release without spending more budget.

mod bootstrap;
mod covariance;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use bootstrap::{hqu_quantile, qu_quantile, BootstrapPlan, HquRelease};
pub use covariance::{gausscov, psd_factor, psd_project, PsdFactor, SignMatrix};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::extremal::{p_rel, ExtremalEstimate};
use crate::privacy::{GaussianMechanism, PrivacyBudget, Regularizer};
use crate::rng::{streams, Seed};
use crate::ustat::{compute_ustat, jackknife_cov, jackknife_sensitivity, jackknife_subset, Kernel, UStatResult};

/// Which critical value produced the decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Branch {
    Bootstrap,
    Gumbel,
    Hoeffding,
    FiniteDim,
}

impl Branch {
    /// The decision rule shared by live runs and re-verification of a
    /// recorded result. `margin` is the critical value minus `Δ`.
    pub fn decide(self, norm_dp: f64, margin: f64, delta: f64) -> bool {
        match self {
            Branch::Bootstrap | Branch::Gumbel => norm_dp >= margin + delta,
            Branch::Hoeffding | Branch::FiniteDim => norm_dp - delta > margin,
        }
    }
}

/// Which test to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BranchPolicy {
    /// Bootstrap on the private extremal set, Gumbel fallback on `⊥`.
    #[default]
    Auto,
    Gumbel,
    Hoeffding,
    Finite,
}

/// Variance bound inside the Gumbel scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GumbelScale {
    /// `√(L∞² − (Δ−γ)²)`.
    #[default]
    Squared,
    /// `√(L∞ − (Δ−γ)²)`.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct HdTestConfig {
    pub alpha: f64,
    pub rho: f64,
    /// PTR slack `δ`; charged only by the extremal-set step.
    pub dp_delta: f64,
    pub bootstrap_reps: usize,
    pub gamma: f64,
    pub gumbel_scale: GumbelScale,
    /// Share of `ρ` given to the extremal-set estimate; the rest is split
    /// evenly between the covariance and the norm release.
    pub gap_budget_fraction: f64,
    pub regularizer: Regularizer,
    pub branch: BranchPolicy,
}

impl Default for HdTestConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            rho: 1.0,
            dp_delta: 1e-3,
            bootstrap_reps: 200,
            gamma: 0.0,
            gumbel_scale: GumbelScale::Squared,
            gap_budget_fraction: 1.0 / 3.0,
            regularizer: Regularizer::None,
            branch: BranchPolicy::Auto,
        }
    }
}

impl HdTestConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.rho > 0.0) {
            return Err(Error::param(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.gap_budget_fraction > 0.0 && self.gap_budget_fraction < 1.0) {
            return Err(Error::param(format!(
                "gap budget fraction must lie in (0, 1), got {}",
                self.gap_budget_fraction
            )));
        }
        if self.branch == BranchPolicy::Auto && !(self.dp_delta > 0.0 && self.dp_delta < 1.0) {
            return Err(Error::param(format!("dp delta must lie in (0, 1), got {}", self.dp_delta)));
        }
        if !self.gamma.is_finite() {
            return Err(Error::param("gamma must be finite"));
        }
        Ok(())
    }

    /// Total `(ρ, δ)` the chosen branch will charge.
    pub fn charge(&self) -> (f64, f64) {
        match self.branch {
            BranchPolicy::Auto => (self.rho, self.dp_delta),
            _ => (self.rho, 0.0),
        }
    }

    fn bootstrap_plan(&self, n: usize, norm_sigma: f64) -> BootstrapPlan {
        BootstrapPlan {
            n,
            reps: self.bootstrap_reps,
            alpha: self.alpha,
            norm_sigma,
        }
    }
}

/// Constants of the Gumbel critical value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GumbelParams {
    pub n: usize,
    pub p: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub bound: f64,
    pub scale: GumbelScale,
}

impl GumbelParams {
    /// Gumbel scale at threshold `Δ`, clamped at zero once `(Δ−γ)²`
    /// reaches the variance bound.
    pub fn scale_at(&self, delta: f64) -> f64 {
        let shift = (delta - self.gamma).powi(2);
        let var = match self.scale {
            GumbelScale::Squared => self.bound * self.bound - shift,
            GumbelScale::Literal => self.bound - shift,
        };
        var.max(0.0).sqrt()
    }

    /// `Q = q^G_{1−α}/a_p + a_p − (ln ln p + ln 4π)/(2a_p)`, `a_p = √(2 ln p)`.
    pub fn q_statistic(&self, delta: f64) -> f64 {
        let lp = (self.p as f64).ln();
        let a = (2.0 * lp).sqrt();
        let scale = self.scale_at(delta);
        let qg = -scale * (-(1.0 - self.alpha).ln()).ln();
        qg / a + a - (lp.ln() + (4.0 * std::f64::consts::PI).ln()) / (2.0 * a)
    }

    /// Critical margin `Q/√n`; reject iff `‖U‖∞^DP ≥ Q/√n + Δ`.
    pub fn margin(&self, delta: f64) -> f64 {
        self.q_statistic(delta) / (self.n as f64).sqrt()
    }
}

/// `√(2 ln(2p/α) ‖h‖∞ r / n)`.
pub fn hoeffding_threshold(n: usize, p: usize, order: usize, h_inf: f64, alpha: f64) -> f64 {
    (2.0 * (2.0 * p as f64 / alpha).ln() * h_inf * order as f64 / n as f64).sqrt()
}

/// Everything a test releases. Deciding at any `Δ` is post-processing.
#[derive(Debug, Clone)]
pub enum HdRelease {
    Bootstrap {
        extremal: ExtremalEstimate,
        norm_dp: f64,
        quantile: f64,
        cov_dp: DMatrix<f64>,
    },
    Gumbel {
        /// `Some(⊥)` when reached as the fallback, `None` when forced.
        extremal: Option<ExtremalEstimate>,
        norm_dp: f64,
        params: GumbelParams,
    },
    Hoeffding {
        norm_dp: f64,
        threshold: f64,
    },
    FiniteDim {
        norm_dp: f64,
        /// Bootstrap quantile divided by `√n`.
        quantile: f64,
        cov_dp: DMatrix<f64>,
    },
}

impl HdRelease {
    pub fn branch(&self) -> Branch {
        match self {
            HdRelease::Bootstrap { .. } => Branch::Bootstrap,
            HdRelease::Gumbel { .. } => Branch::Gumbel,
            HdRelease::Hoeffding { .. } => Branch::Hoeffding,
            HdRelease::FiniteDim { .. } => Branch::FiniteDim,
        }
    }

    pub fn norm_dp(&self) -> f64 {
        match self {
            HdRelease::Bootstrap { norm_dp, .. }
            | HdRelease::Gumbel { norm_dp, .. }
            | HdRelease::Hoeffding { norm_dp, .. }
            | HdRelease::FiniteDim { norm_dp, .. } => *norm_dp,
        }
    }

    /// Critical value minus `Δ`, on the scale of `‖U‖∞`.
    pub fn margin(&self, delta: f64) -> f64 {
        match self {
            HdRelease::Bootstrap { quantile, .. } | HdRelease::FiniteDim { quantile, .. } => *quantile,
            HdRelease::Gumbel { params, .. } => params.margin(delta),
            HdRelease::Hoeffding { threshold, .. } => *threshold,
        }
    }

    pub fn decide(&self, delta: f64) -> bool {
        self.branch().decide(self.norm_dp(), self.margin(delta), delta)
    }

    pub fn extremal(&self) -> Option<&ExtremalEstimate> {
        match self {
            HdRelease::Bootstrap { extremal, .. } => Some(extremal),
            HdRelease::Gumbel { extremal, .. } => extremal.as_ref(),
            _ => None,
        }
    }

    pub fn cov_dp(&self) -> Option<&DMatrix<f64>> {
        match self {
            HdRelease::Bootstrap { cov_dp, .. } | HdRelease::FiniteDim { cov_dp, .. } => Some(cov_dp),
            _ => None,
        }
    }

    pub fn outcome(&self, delta: f64, budget: &PrivacyBudget) -> TestOutcome {
        TestOutcome {
            reject: self.decide(delta),
            delta,
            branch: self.branch(),
            norm_dp: self.norm_dp(),
            quantile: self.margin(delta),
            extremal: self.extremal().cloned(),
            cov_dp: self.cov_dp().cloned(),
            budget_spent: budget.spent(),
        }
    }
}

/// Result of a single test at one threshold.
#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub reject: bool,
    pub delta: f64,
    pub branch: Branch,
    pub norm_dp: f64,
    /// Critical margin on the `‖U‖∞` scale (critical value minus `Δ`).
    pub quantile: f64,
    pub extremal: Option<ExtremalEstimate>,
    pub cov_dp: Option<DMatrix<f64>>,
    pub budget_spent: (f64, f64),
}

fn norm_mechanism(stat: &UStatResult, rho: f64) -> Result<GaussianMechanism> {
    let sens = 2.0 * stat.order as f64 * stat.bound / stat.n as f64;
    GaussianMechanism::new(sens, rho)
}

fn release_norm(stat: &UStatResult, mech: &GaussianMechanism, budget: &mut PrivacyBudget, seed: Seed) -> Result<f64> {
    let r = mech.release("hd-test/norm", &[stat.max_abs()], budget, &mut seed.stream(streams::NORM))?;
    Ok(r.scalar())
}

fn gumbel_params(stat: &UStatResult, config: &HdTestConfig) -> Result<GumbelParams> {
    if stat.p() < 2 {
        return Err(Error::param("the Gumbel test needs p >= 2"));
    }
    Ok(GumbelParams {
        n: stat.n,
        p: stat.p(),
        alpha: config.alpha,
        gamma: config.gamma,
        bound: stat.bound,
        scale: config.gumbel_scale,
    })
}

/// Gumbel test release: `‖U‖∞^DP` with budget `rho`.
pub fn gumbel_release(
    stat: &UStatResult,
    rho: f64,
    config: &HdTestConfig,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<HdRelease> {
    let params = gumbel_params(stat, config)?;
    let norm_dp = release_norm(stat, &norm_mechanism(stat, rho)?, budget, seed)?;
    Ok(HdRelease::Gumbel {
        extremal: None,
        norm_dp,
        params,
    })
}

pub fn p_gumbel_test(
    stat: &UStatResult,
    delta: f64,
    config: &HdTestConfig,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<TestOutcome> {
    config.validate()?;
    let release = gumbel_release(stat, config.rho, config, budget, seed)?;
    Ok(release.outcome(delta, budget))
}

/// Hoeffding release with budget `rho`; `ρ = ∞` is the non-private test.
pub fn hoeffding_release(
    stat: &UStatResult,
    rho: f64,
    alpha: f64,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<HdRelease> {
    let norm_dp = release_norm(stat, &norm_mechanism(stat, rho)?, budget, seed)?;
    Ok(HdRelease::Hoeffding {
        norm_dp,
        threshold: hoeffding_threshold(stat.n, stat.p(), stat.order, stat.bound, alpha),
    })
}

pub fn hoeffding_test(
    stat: &UStatResult,
    delta: f64,
    config: &HdTestConfig,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<TestOutcome> {
    config.validate()?;
    let release = hoeffding_release(stat, config.rho, config.alpha, budget, seed)?;
    Ok(release.outcome(delta, budget))
}

/// Bootstrap test on all `p` coordinates: `ρ/2` for the full jackknife
/// covariance, `ρ/2` for the norm.
pub fn finite_dim_release<K: Kernel + ?Sized>(
    data: &DataMatrix,
    kernel: &K,
    config: &HdTestConfig,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<HdRelease> {
    let stat = compute_ustat(data, kernel, true)?;
    budget.check("hd-test/finite", config.rho, 0.0)?;
    let p = stat.p();
    let all: Vec<usize> = (0..p).collect();
    let jk = jackknife_cov(&stat, &all)?;
    let half = config.rho / 2.0;
    let cov_sens = jackknife_sensitivity(stat.order, stat.bound, stat.n, p)?;
    let cov_dp = gausscov(
        "hd-test/covariance",
        &jk.zeta,
        half,
        cov_sens,
        budget,
        &mut seed.stream(streams::COVARIANCE),
    )?;
    let cov_dp = psd_project(&cov_dp)?;
    let mech = norm_mechanism(&stat, half)?;
    let norm_dp = release_norm(&stat, &mech, budget, seed)?;
    let q = qu_quantile(&cov_dp, &config.bootstrap_plan(stat.n, mech.sigma()), seed)?;
    Ok(HdRelease::FiniteDim {
        norm_dp,
        quantile: q / (stat.n as f64).sqrt(),
        cov_dp,
    })
}

pub fn finite_dim_test<K: Kernel + ?Sized>(
    data: &DataMatrix,
    kernel: &K,
    delta: f64,
    config: &HdTestConfig,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<TestOutcome> {
    config.validate()?;
    let release = finite_dim_release(data, kernel, config, budget, seed)?;
    Ok(release.outcome(delta, budget))
}

/// Extremal set first; bootstrap on it, or the Gumbel test on `⊥`.
fn adaptive_release<K: Kernel + ?Sized>(
    data: &DataMatrix,
    kernel: &K,
    stat: &UStatResult,
    config: &HdTestConfig,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<HdRelease> {
    if stat.p() < 2 {
        return Err(Error::param("the high-dimensional test needs p >= 2"));
    }
    let rho_gap = config.rho * config.gap_budget_fraction;
    let rho_rest = config.rho * (1.0 - config.gap_budget_fraction);
    let extremal = p_rel(
        &stat.u,
        kernel,
        stat.n,
        rho_gap,
        config.dp_delta,
        &config.regularizer,
        budget,
        seed,
    )?;
    let indices = match &extremal {
        ExtremalEstimate::Bottom => {
            let mut release = gumbel_release(stat, rho_rest, config, budget, seed)?;
            if let HdRelease::Gumbel { extremal: e, .. } = &mut release {
                *e = Some(ExtremalEstimate::Bottom);
            }
            return Ok(release);
        }
        ExtremalEstimate::Set { indices, .. } => indices.clone(),
    };

    let rho_cov = rho_rest / 2.0;
    let rho_norm = rho_rest / 2.0;
    let jk = jackknife_subset(data, kernel, &stat.u, &indices)?;
    let signs = SignMatrix::from_statistic(&stat.u, &indices);
    let cov_sens = jackknife_sensitivity(stat.order, stat.bound, stat.n, indices.len())?;
    let mech = norm_mechanism(stat, rho_norm)?;
    let norm_dp = release_norm(stat, &mech, budget, seed)?;
    let hqu = hqu_quantile(
        &jk.zeta,
        &signs,
        &config.bootstrap_plan(stat.n, mech.sigma()),
        cov_sens,
        rho_cov,
        budget,
        seed,
    )?;
    Ok(HdRelease::Bootstrap {
        extremal,
        norm_dp,
        quantile: hqu.quantile,
        cov_dp: hqu.cov_dp,
    })
}

/// Runs every private step of the configured test once.
///
/// The budget is checked for the full charge before anything is released.
pub fn hd_release<K: Kernel + ?Sized>(
    data: &DataMatrix,
    kernel: &K,
    config: &HdTestConfig,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<HdRelease> {
    config.validate()?;
    let (rho, delta) = config.charge();
    budget.check("hd-test", rho, delta)?;
    match config.branch {
        BranchPolicy::Finite => finite_dim_release(data, kernel, config, budget, seed),
        policy => {
            let stat = compute_ustat(data, kernel, false)?;
            match policy {
                BranchPolicy::Auto => adaptive_release(data, kernel, &stat, config, budget, seed),
                BranchPolicy::Gumbel => gumbel_release(&stat, config.rho, config, budget, seed),
                BranchPolicy::Hoeffding => hoeffding_release(&stat, config.rho, config.alpha, budget, seed),
                BranchPolicy::Finite => unreachable!(),
            }
        }
    }
}

/// The private high-dimensional test at a single threshold.
pub fn p_hd_u_test<K: Kernel + ?Sized>(
    data: &DataMatrix,
    kernel: &K,
    delta: f64,
    config: &HdTestConfig,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<TestOutcome> {
    let release = hd_release(data, kernel, config, budget, seed)?;
    Ok(release.outcome(delta, budget))
}

/// How the scan estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ScanStatus {
    /// Some grid points reject and some do not.
    Found,
    /// Every grid point rejects; the estimate is 0.
    AllRejected,
    /// No grid point rejects; the estimate is the grid minimum.
    NoneRejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanPoint {
    pub delta: f64,
    pub reject: bool,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    /// Smallest grid `Δ` at which the test does not reject.
    pub delta_hat: f64,
    pub status: ScanStatus,
    pub points: Vec<ScanPoint>,
    pub release: HdRelease,
}

/// `Δ̂` and its status from `(Δ, reject)` pairs.
pub fn summarize_scan(points: impl IntoIterator<Item = (f64, bool)>) -> (f64, ScanStatus) {
    let mut min_accepted: Option<f64> = None;
    let mut any_reject = false;
    for (delta, reject) in points {
        if reject {
            any_reject = true;
        } else {
            min_accepted = Some(min_accepted.map_or(delta, |m| m.min(delta)));
        }
    }
    match min_accepted {
        None => (0.0, ScanStatus::AllRejected),
        Some(d) if !any_reject => (d, ScanStatus::NoneRejected),
        Some(d) => (d, ScanStatus::Found),
    }
}

/// Decides every threshold of a grid from one existing release.
pub fn scan_release(release: HdRelease, grid: &[f64]) -> Result<ScanResult> {
    if grid.is_empty() {
        return Err(Error::param("threshold grid is empty"));
    }
    if grid.iter().any(|d| !d.is_finite()) {
        return Err(Error::param("threshold grid has a non-finite entry"));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("threshold grid must be strictly descending"));
    }
    let points: Vec<ScanPoint> = grid
        .iter()
        .map(|&delta| ScanPoint {
            delta,
            reject: release.decide(delta),
            margin: release.margin(delta),
        })
        .collect();
    let (delta_hat, status) = summarize_scan(points.iter().map(|p| (p.delta, p.reject)));
    Ok(ScanResult {
        delta_hat,
        status,
        points,
        release,
    })
}

/// `Δ̂ = min{Δ ∈ grid : φ(Δ) = 0}`, releasing once for the whole grid.
pub fn scan_delta<K: Kernel + ?Sized>(
    data: &DataMatrix,
    kernel: &K,
    grid: &[f64],
    config: &HdTestConfig,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<ScanResult> {
    if grid.is_empty() {
        return Err(Error::param("threshold grid is empty"));
    }
    let release = hd_release(data, kernel, config, budget, seed)?;
    scan_release(release, grid)
}

/// The default scan grid `0.99, 0.98, …, 0.01`.
pub fn default_grid() -> Vec<f64> {
    (1..=99).rev().map(|i| i as f64 / 100.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ustat::KendallKernel;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn config(branch: BranchPolicy) -> HdTestConfig {
        HdTestConfig {
            branch,
            ..HdTestConfig::default()
        }
    }

    /// Columns 0 and 1 share a latent factor; the rest are independent.
    fn planted(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = Seed(seed).stream(0);
        let mut cols = vec![0.0; n * d];
        for i in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            for j in 0..d {
                let e: f64 = rng.sample(StandardNormal);
                cols[j * n + i] = if j < 2 { z + 0.2 * e } else { e };
            }
        }
        DataMatrix::from_columns(n, d, cols).unwrap()
    }

    #[test]
    fn gumbel_closed_form() {
        let params = GumbelParams {
            n: 100,
            p: 15, // any p; check against the formula at p = e^e below
            alpha: 0.05,
            gamma: 0.3,
            bound: 1.0,
            scale: GumbelScale::Squared,
        };
        assert_eq!(params.scale_at(0.3), 1.0);
        let lp = std::f64::consts::E;
        let a = (2.0 * lp).sqrt();
        let qg = -(-(0.95f64).ln()).ln();
        let expected = qg / a + a - (1.0 + (4.0 * std::f64::consts::PI).ln()) / (2.0 * a);
        // emulate p = e^e through the same algebra
        let got = {
            let scale = params.scale_at(0.3);
            let qg = -scale * (-(0.95f64).ln()).ln();
            qg / a + a - (lp.ln() + (4.0 * std::f64::consts::PI).ln()) / (2.0 * a)
        };
        assert!((got - expected).abs() < 1e-14);
        let lp15 = 15f64.ln();
        let a15 = (2.0 * lp15).sqrt();
        let q15 = qg / a15 + a15 - (lp15.ln() + (4.0 * std::f64::consts::PI).ln()) / (2.0 * a15);
        assert!((params.q_statistic(0.3) - q15).abs() < 1e-14);
        assert!((params.margin(0.3) - q15 / 10.0).abs() < 1e-15);

        let lit = GumbelParams { scale: GumbelScale::Literal, bound: 0.5, gamma: 0.0, ..params };
        assert!((lit.scale_at(0.5) - 0.5f64.sqrt() * 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(lit.scale_at(0.9), 0.0);
    }

    #[test]
    fn decision_rules() {
        assert!(Branch::Bootstrap.decide(0.5, 0.1, 0.4));
        assert!(!Branch::Hoeffding.decide(0.5, 0.1, 0.4));
        assert!(Branch::Hoeffding.decide(0.51, 0.1, 0.4));
        let t = hoeffding_threshold(1000, 45, 2, 1.0, 0.05);
        assert!((t - (2.0 * (1800.0f64).ln() * 2.0 / 1000.0).sqrt()).abs() < 1e-15);
        // statistic exactly at Δ never rejects
        assert!(!Branch::Hoeffding.decide(0.3, t, 0.3));
    }

    #[test]
    fn far_below_threshold_never_rejects() {
        let data = planted(200, 6, 1);
        let k = KendallKernel::new(6).unwrap();
        let stat = compute_ustat(&data, &k, false).unwrap();
        let mut b = PrivacyBudget::new(1.0, 0.0).unwrap();
        let out = p_gumbel_test(&stat, stat.max_abs() + 1.0, &config(BranchPolicy::Gumbel), &mut b, Seed(0)).unwrap();
        assert!(!out.reject);
        assert_eq!(out.branch, Branch::Gumbel);
    }

    #[test]
    fn noiseless_pipeline_takes_bootstrap_branch() {
        let data = planted(300, 6, 2);
        let k = KendallKernel::new(6).unwrap();
        let cfg = HdTestConfig {
            rho: f64::INFINITY,
            ..config(BranchPolicy::Auto)
        };
        let mut b = PrivacyBudget::unlimited();
        let out = p_hd_u_test(&data, &k, 0.2, &cfg, &mut b, Seed(0)).unwrap();
        assert_eq!(out.branch, Branch::Bootstrap);
        assert_eq!(out.extremal.unwrap().indices(), &[k.coord_of(0, 1).unwrap()]);
        assert!(out.reject);
        let stat = compute_ustat(&data, &k, false).unwrap();
        assert_eq!(out.norm_dp, stat.max_abs());
    }

    #[test]
    fn budget_is_spent_exactly() {
        let data = planted(300, 6, 3);
        let k = KendallKernel::new(6).unwrap();
        for policy in [BranchPolicy::Auto, BranchPolicy::Gumbel, BranchPolicy::Hoeffding, BranchPolicy::Finite] {
            let cfg = HdTestConfig { rho: 0.6, dp_delta: 0.01, ..config(policy) };
            let mut b = PrivacyBudget::new(0.6, 0.01).unwrap();
            p_hd_u_test(&data, &k, 0.3, &cfg, &mut b, Seed(4)).unwrap();
            let (r, d) = b.spent();
            assert!((r - 0.6).abs() < 1e-12, "{policy:?} {r}");
            assert!(d <= 0.01 + 1e-15);
            // a second run must fail before touching the ledger
            let len = b.ledger().len();
            let err = p_hd_u_test(&data, &k, 0.3, &cfg, &mut b, Seed(4)).unwrap_err();
            assert!(matches!(err, Error::BudgetExhausted { .. }));
            assert_eq!(b.ledger().len(), len);
        }
    }

    #[test]
    fn scan_is_monotone_and_consistent() {
        let data = planted(300, 6, 5);
        let k = KendallKernel::new(6).unwrap();
        let cfg = config(BranchPolicy::Auto);
        let mut b = PrivacyBudget::new(1.0, 1e-3).unwrap();
        let scan = scan_delta(&data, &k, &default_grid(), &cfg, &mut b, Seed(6)).unwrap();
        if scan.release.branch() == Branch::Bootstrap {
            let mut seen_accept = false;
            for p in &scan.points {
                // grid descends: once a point rejects, every lower one does too
                if p.reject {
                    seen_accept = true;
                } else {
                    assert!(!seen_accept);
                }
            }
        }
        for p in &scan.points {
            assert_eq!(p.reject, scan.release.decide(p.delta));
        }
        assert_eq!(b.spent().0, 1.0);
    }

    #[test]
    fn scan_statuses() {
        let release = HdRelease::Hoeffding { norm_dp: 0.63, threshold: 0.1 };
        let s = scan_release(release.clone(), &[0.9, 0.6, 0.5, 0.4]).unwrap();
        assert_eq!(s.status, ScanStatus::Found);
        assert_eq!(s.delta_hat, 0.6);
        let s = scan_release(release.clone(), &[0.3, 0.2]).unwrap();
        assert_eq!((s.status, s.delta_hat), (ScanStatus::AllRejected, 0.0));
        let s = scan_release(release.clone(), &[0.9, 0.8]).unwrap();
        assert_eq!((s.status, s.delta_hat), (ScanStatus::NoneRejected, 0.8));
        assert!(scan_release(release.clone(), &[0.2, 0.3]).is_err());
        assert!(scan_release(release, &[]).is_err());
    }

    #[test]
    fn invalid_configs() {
        let data = planted(50, 3, 0);
        let k = KendallKernel::new(3).unwrap();
        let mut b = PrivacyBudget::unlimited();
        for cfg in [
            HdTestConfig { alpha: 0.0, ..HdTestConfig::default() },
            HdTestConfig { gap_budget_fraction: 1.0, ..HdTestConfig::default() },
            HdTestConfig { dp_delta: 0.0, ..HdTestConfig::default() },
            HdTestConfig { rho: -1.0, ..HdTestConfig::default() },
        ] {
            assert!(p_hd_u_test(&data, &k, 0.3, &cfg, &mut b, Seed(0)).is_err());
        }
    }
}
