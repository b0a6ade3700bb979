//! Bounded vector-valued U-statistics, leave-one-out replicates, the
//! jackknife covariance, and the sensitivity constants used to calibrate
//! every private release.

mod kendall;
mod kernel;
mod sensitivity;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub use kendall::{sign_sum_naive, tau_fast, tau_naive, KendallKernel};
pub use kernel::{enumerate_leave_one_out, enumerate_statistic, FnKernel, Kernel, MeanKernel};
pub use sensitivity::{gap_sensitivity, jackknife_sensitivity, ln_binomial, ustat_sensitivity};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// A computed U-statistic together with the constants needed downstream.
#[derive(Debug, Clone)]
pub struct UStatResult {
    pub u: Vec<f64>,
    /// Row `l` holds the statistic recomputed without observation `l`.
    pub leave_one_out: Option<DMatrix<f64>>,
    pub n: usize,
    pub order: usize,
    pub bound: f64,
}

impl UStatResult {
    pub fn p(&self) -> usize {
        self.u.len()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.u)
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_shape<K: Kernel + ?Sized>(data: &DataMatrix, kernel: &K, min_rows: usize) -> Result<()> {
    if data.d() != kernel.input_dim() {
        return Err(Error::Dimension(format!(
            "kernel `{}` expects {} columns, data has {}",
            kernel.name(),
            kernel.input_dim(),
            data.d()
        )));
    }
    if data.n() < min_rows {
        return Err(Error::Data(format!(
            "need at least {min_rows} rows for a kernel of order {}, got {}",
            kernel.order(),
            data.n()
        )));
    }
    kernel.validate(data)
}

/// Computes `U`, and optionally every leave-one-out replicate `U^(l)`.
pub fn compute_ustat<K: Kernel + ?Sized>(
    data: &DataMatrix,
    kernel: &K,
    with_leave_one_out: bool,
) -> Result<UStatResult> {
    let min_rows = kernel.order() + usize::from(with_leave_one_out);
    check_shape(data, kernel, min_rows)?;
    let u = kernel.statistic(data);
    let leave_one_out = if with_leave_one_out {
        let all: Vec<usize> = (0..kernel.output_dim()).collect();
        Some(kernel.leave_one_out(data, &all))
    } else {
        None
    };
    Ok(UStatResult {
        u,
        leave_one_out,
        n: data.n(),
        order: kernel.order(),
        bound: kernel.bound(),
    })
}

/// Jackknife estimate `(n−1) Σ_l (U^(l) − U)(U^(l) − U)ᵀ` restricted to a
/// coordinate subset.
///
/// This estimates `n·Cov(U)`; Gaussian draws meant to mimic `U` itself
/// must therefore use `zeta / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct JackknifeCov {
    pub zeta: DMatrix<f64>,
    pub indices: Vec<usize>,
}

/// Jackknife from replicates already restricted to `indices`: `u_sub[c]`
/// is `U_{indices[c]}`, column `c` of `replicates` its leave-one-out values.
pub fn jackknife_from_replicates(
    u_sub: &[f64],
    replicates: &DMatrix<f64>,
    indices: Vec<usize>,
) -> Result<JackknifeCov> {
    let k = u_sub.len();
    if replicates.ncols() != k || indices.len() != k {
        return Err(Error::Dimension(format!(
            "{} replicate columns, {} statistics, {} indices",
            replicates.ncols(),
            k,
            indices.len()
        )));
    }
    let n = replicates.nrows();
    let centered = DMatrix::from_fn(n, k, |l, c| replicates[(l, c)] - u_sub[c]);
    let mut zeta = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let mut s = 0.0;
            for l in 0..n {
                s += centered[(l, a)] * centered[(l, b)];
            }
            let v = (n as f64 - 1.0) * s;
            zeta[(a, b)] = v;
            zeta[(b, a)] = v;
        }
    }
    Ok(JackknifeCov { zeta, indices })
}

pub fn jackknife_cov(result: &UStatResult, indices: &[usize]) -> Result<JackknifeCov> {
    let loo = result
        .leave_one_out
        .as_ref()
        .ok_or(Error::MissingLeaveOneOut)?;
    if let Some(&bad) = indices.iter().find(|&&i| i >= result.p()) {
        return Err(Error::Dimension(format!(
            "index {bad} out of range for p = {}",
            result.p()
        )));
    }
    let sub = loo.select_columns(indices);
    let u_sub: Vec<f64> = indices.iter().map(|&i| result.u[i]).collect();
    jackknife_from_replicates(&u_sub, &sub, indices.to_vec())
}

/// Jackknife restricted to `indices`, computing only the replicates it
/// needs. `u` is the full statistic.
pub fn jackknife_subset<K: Kernel + ?Sized>(
    data: &DataMatrix,
    kernel: &K,
    u: &[f64],
    indices: &[usize],
) -> Result<JackknifeCov> {
    check_shape(data, kernel, kernel.order() + 1)?;
    if let Some(&bad) = indices.iter().find(|&&i| i >= u.len()) {
        return Err(Error::Dimension(format!("index {bad} out of range")));
    }
    let replicates = kernel.leave_one_out(data, indices);
    let u_sub: Vec<f64> = indices.iter().map(|&i| u[i]).collect();
    jackknife_from_replicates(&u_sub, &replicates, indices.to_vec())
}

/// Adds independent `N(0, sd²)` noise to every entry, breaking ties in
/// discrete data.
pub fn tie_jitter<R: Rng + ?Sized>(data: &DataMatrix, sd: f64, rng: &mut R) -> Result<DataMatrix> {
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::param(format!("jitter sd must be positive, got {sd}")));
    }
    let normal = Normal::new(0.0, sd).map_err(|e| Error::param(e.to_string()))?;
    data.map_values(|v| v + normal.sample(rng))
}
