use statrs::function::gamma::ln_gamma;

use super::kernel::Kernel;
use crate::error::{Error, Result};

/// `ln C(a, b)` for real `a ≥ b ≥ 0`, via log-gamma.
pub fn ln_binomial(a: f64, b: f64) -> f64 {
    ln_gamma(a + 1.0) - ln_gamma(b + 1.0) - ln_gamma(a - b + 1.0)
}

/// Replacement sensitivity `2 r L∞ / n` of every coordinate `U_j` and of
/// `‖U‖∞` (in both ℓ∞ and ℓ₂ since the latter is a scalar).
pub fn ustat_sensitivity<K: Kernel + ?Sized>(kernel: &K, n: usize) -> f64 {
    2.0 * kernel.order() as f64 * kernel.bound() / n as f64
}

/// Sensitivity `4 r L∞ / n` of a gap query `|U|_(j) − |U|_(j+1)`; also the
/// PTR threshold of the extremal-set estimator.
pub fn gap_sensitivity<K: Kernel + ?Sized>(kernel: &K, n: usize) -> f64 {
    2.0 * ustat_sensitivity(kernel, n)
}

/// Frobenius sensitivity of a `k × k` block of the jackknife covariance:
///
/// `((n−1) r / (n (n−r))) Σ_{c=0}^{r} [C(n−r+c, r−c) / C(n−1, r)] C(r,c) |cn − r²| √2 k L∞²`.
pub fn jackknife_sensitivity(order: usize, bound: f64, n: usize, k: usize) -> Result<f64> {
    if n <= order || k == 0 || order == 0 {
        return Err(Error::param(format!(
            "jackknife sensitivity needs n > r >= 1 and k >= 1 (n={n}, r={order}, k={k})"
        )));
    }
    let (nf, rf) = (n as f64, order as f64);
    let ln_denominator = ln_binomial(nf - 1.0, rf);
    let sum: f64 = (0..=order)
        .map(|c| {
            let cf = c as f64;
            let ratio = (ln_binomial(nf - rf + cf, rf - cf) - ln_denominator).exp();
            ratio * ln_binomial(rf, cf).exp().round() * (cf * nf - rf * rf).abs()
        })
        .sum();
    let prefactor = (nf - 1.0) * rf / (nf * (nf - rf));
    Ok(prefactor * sum * std::f64::consts::SQRT_2 * k as f64 * bound * bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ustat::{KendallKernel, MeanKernel};
    use num::bigint::BigInt;
    use num::rational::BigRational;
    use num::{One, ToPrimitive, Zero};

    fn binom(n: u64, k: u64) -> BigInt {
        if k > n {
            return BigInt::zero();
        }
        let mut acc = BigInt::one();
        for i in 0..k {
            acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        acc
    }

    /// The rational part of the closed form, summed term by term with exact
    /// binomials; `√2 k L∞²` is applied afterwards in floating point.
    fn exact_rational_part(r: u64, n: u64) -> f64 {
        let mut sum = BigRational::zero();
        for c in 0..=r {
            let num = binom(n - r + c, r - c) * binom(r, c) * BigInt::from((c as i64 * n as i64 - (r * r) as i64).abs());
            sum += BigRational::new(num, binom(n - 1, r));
        }
        let pre = BigRational::new(BigInt::from((n - 1) * r), BigInt::from(n * (n - r)));
        (pre * sum).to_f64().unwrap()
    }

    #[test]
    fn ustat_sensitivity_constants() {
        let kendall = KendallKernel::new(3).unwrap();
        assert!((ustat_sensitivity(&kendall, 2000) - 0.002).abs() < 1e-15);
        assert!((gap_sensitivity(&kendall, 2000) - 0.004).abs() < 1e-15);
        for n in [10, 250, 1000] {
            assert!((ustat_sensitivity(&kendall, n) - 4.0 / n as f64).abs() < 1e-15);
        }
        let mean = MeanKernel::new(2, 1.0).unwrap();
        assert!((ustat_sensitivity(&mean, 100) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn jackknife_small_case() {
        // r=1, n=2: (1/2)·[C(1,1)·1·1 + C(2,0)·1·1]·√2 = √2
        let v = jackknife_sensitivity(1, 1.0, 2, 1).unwrap();
        assert!((v - std::f64::consts::SQRT_2).abs() < 1e-14);
        assert!((exact_rational_part(1, 2) * std::f64::consts::SQRT_2 - v).abs() < 1e-14);
    }

    #[test]
    fn jackknife_matches_exact_evaluation() {
        for (r, n, k) in [(2u64, 100u64, 5usize), (1, 50, 3), (3, 40, 2), (2, 1000, 7)] {
            let got = jackknife_sensitivity(r as usize, 1.0, n as usize, k).unwrap();
            let want = exact_rational_part(r, n) * std::f64::consts::SQRT_2 * k as f64;
            assert!(((got - want) / want).abs() < 1e-12, "r={r} n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn jackknife_is_linear_in_k_and_quadratic_in_bound() {
        let a = jackknife_sensitivity(2, 1.0, 500, 3).unwrap();
        let b = jackknife_sensitivity(2, 1.0, 500, 6).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-15 * b);
        let c = jackknife_sensitivity(2, 2.0, 500, 3).unwrap();
        assert!((c - 4.0 * a).abs() < 1e-14 * c);
    }

    #[test]
    fn jackknife_is_finite_for_large_n() {
        let v = jackknife_sensitivity(3, 1.0, 1_000_000, 10).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(jackknife_sensitivity(2, 1.0, 2, 1).is_err());
    }
}
