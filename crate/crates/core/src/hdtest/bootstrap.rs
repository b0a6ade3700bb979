//! Gaussian-multiplier quantiles for the max-norm statistic.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::covariance::{gausscov, psd_factor, SignMatrix};
use crate::error::{Error, Result};
use crate::privacy::PrivacyBudget;
use crate::rng::{streams, Seed};

/// Bootstrap size, level and the release noise mimicked on every draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapPlan {
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    /// Standard deviation of the Gaussian noise on the real `‖U‖∞` release.
    pub norm_sigma: f64,
}

impl BootstrapPlan {
    /// 0-based position of the `⌊(1−α)B⌋`-th order statistic.
    fn order_index(&self) -> Result<usize> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let idx = ((1.0 - self.alpha) * self.reps as f64).floor() as usize;
        if idx == 0 || (self.reps as f64) * self.alpha < 1.0 - 1e-9 {
            return Err(Error::param(format!(
                "B = {} is too small for alpha = {}",
                self.reps, self.alpha
            )));
        }
        Ok(idx - 1)
    }
}

/// Draws `‖F z / √n‖∞ + σ ε` for `B` replicates, replicate `b` reading
/// only its own stream, and returns them sorted ascending.
fn sorted_max_norms(factor: &DMatrix<f64>, plan: &BootstrapPlan, seed: Seed) -> Vec<f64> {
    let k = factor.ncols();
    let scale = 1.0 / (plan.n as f64).sqrt();
    let mut draws: Vec<f64> = (0..plan.reps)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.stream(streams::BOOTSTRAP_BASE + b as u64);
            let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
            let x = factor * z;
            let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs())) * scale;
            let e: f64 = rng.sample(StandardNormal);
            norm + plan.norm_sigma * e
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    draws
}

/// Output of the sign-adjusted bootstrap: the U-scale quantile and the
/// released covariance it was drawn from.
#[derive(Debug, Clone)]
pub struct HquRelease {
    pub quantile: f64,
    pub cov_dp: DMatrix<f64>,
}

/// Privatizes `S ⊙ ζ̂` once (debiting `rho_cov`), repairs it to PSD, and
/// returns the `(1−α)` quantile of `‖N(0, ζ/n)‖∞ + noise`.
pub fn hqu_quantile(
    zeta_hat: &DMatrix<f64>,
    signs: &SignMatrix,
    plan: &BootstrapPlan,
    cov_sensitivity: f64,
    rho_cov: f64,
    budget: &mut PrivacyBudget,
    seed: Seed,
) -> Result<HquRelease> {
    let idx = plan.order_index()?;
    let signed = signs.apply(zeta_hat)?;
    let noisy = gausscov(
        "hd-test/covariance",
        &signed,
        rho_cov,
        cov_sensitivity,
        budget,
        &mut seed.stream(streams::COVARIANCE),
    )?;
    let psd = psd_factor(&noisy)?;
    let draws = sorted_max_norms(&psd.factor, plan, seed);
    Ok(HquRelease {
        quantile: draws[idx],
        cov_dp: psd.matrix,
    })
}

/// Quantile of `√n (‖N(0, ζ/n)‖∞ + noise)` for an already private `ζ`.
pub fn qu_quantile(zeta_dp: &DMatrix<f64>, plan: &BootstrapPlan, seed: Seed) -> Result<f64> {
    let idx = plan.order_index()?;
    let psd = psd_factor(zeta_dp)?;
    let draws = sorted_max_norms(&psd.factor, plan, seed);
    Ok((plan.n as f64).sqrt() * draws[idx])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy::normal_quantile;

    fn plan(n: usize, reps: usize, alpha: f64) -> BootstrapPlan {
        BootstrapPlan { n, reps, alpha, norm_sigma: 0.0 }
    }

    #[test]
    fn folded_normal_quantile() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let q = qu_quantile(&one, &plan(100, 40_000, 0.05), Seed(4)).unwrap();
        let exact = normal_quantile(0.975);
        assert!((q - exact).abs() < 0.04, "{q}");

        let s = SignMatrix::from_statistic(&[0.3], &[0]);
        let mut b = PrivacyBudget::unlimited();
        let r = hqu_quantile(&one, &s, &plan(100, 40_000, 0.05), 1.0, f64::INFINITY, &mut b, Seed(4)).unwrap();
        assert!((r.quantile * 10.0 - exact).abs() < 0.04);
    }

    #[test]
    fn zero_covariance() {
        let z = DMatrix::zeros(3, 3);
        assert_eq!(qu_quantile(&z, &plan(50, 100, 0.1), Seed(0)).unwrap(), 0.0);
        let with_noise = BootstrapPlan { norm_sigma: 0.1, ..plan(100, 4000, 0.05) };
        let q = qu_quantile(&z, &with_noise, Seed(0)).unwrap();
        // √n · σ · z_{0.95}
        assert!((q - 10.0 * 0.1 * normal_quantile(0.95)).abs() < 0.1);
    }

    #[test]
    fn scaling_with_matched_seeds() {
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.8]);
        let s = plan(200, 500, 0.05);
        let q1 = qu_quantile(&z, &s, Seed(8)).unwrap();
        let q2 = qu_quantile(&(&z * 2.0), &s, Seed(8)).unwrap();
        assert!((q2 / q1 - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn monotone_in_alpha() {
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]);
        let mut prev = f64::NEG_INFINITY;
        for alpha in [0.5, 0.2, 0.1, 0.05, 0.01] {
            let q = qu_quantile(&z, &BootstrapPlan { norm_sigma: 0.05, ..plan(100, 500, alpha) }, Seed(1)).unwrap();
            assert!(q >= prev);
            prev = q;
        }
    }

    #[test]
    fn permutation_invariance_in_distribution() {
        let z = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.5, 2.0, 0.3, 0.0, 0.3, 0.5]);
        let perm = [2, 0, 1];
        let zp = DMatrix::from_fn(3, 3, |i, j| z[(perm[i], perm[j])]);
        let s = plan(100, 40_000, 0.05);
        let a = qu_quantile(&z, &s, Seed(2)).unwrap();
        let b = qu_quantile(&zp, &s, Seed(3)).unwrap();
        assert!((a - b).abs() < 0.05, "{a} {b}");
    }

    #[test]
    fn too_few_replicates() {
        let z = DMatrix::from_element(1, 1, 1.0);
        assert!(qu_quantile(&z, &plan(10, 10, 0.05), Seed(0)).is_err());
        assert!(qu_quantile(&z, &plan(10, 20, 0.05), Seed(0)).is_ok());
    }

    #[test]
    fn deterministic() {
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.8]);
        let s = BootstrapPlan { norm_sigma: 0.01, ..plan(200, 300, 0.05) };
        assert_eq!(qu_quantile(&z, &s, Seed(5)).unwrap(), qu_quantile(&z, &s, Seed(5)).unwrap());
    }
}
