//! Kendall's tau target matrices and Gaussian-copula sampling.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Largest Frobenius distance tolerated when repairing `sin(πτ/2)` to a
/// correlation matrix.
pub const REPAIR_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Design {
    /// 0.5 on every pair inside the leading `⌊d/√2⌋` block.
    F1,
    /// 0.5 on the three pairs among the first three coordinates.
    F2,
    /// Rank-one profile without gaps on the leading block.
    U1,
    /// 0.5 on the leading block, 0.25 on the trailing block.
    U2,
    Custom,
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Design::F1 => "F1",
            Design::F2 => "F2",
            Design::U1 => "U1",
            Design::U2 => "U2",
            Design::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "F1" => Ok(Design::F1),
            "F2" => Ok(Design::F2),
            "U1" => Ok(Design::U1),
            "U2" => Ok(Design::U2),
            "CUSTOM" => Ok(Design::Custom),
            _ => Err(Error::param(format!("unknown design `{s}`"))),
        }
    }
}

/// A target Kendall's tau matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TauModel {
    pub design: Design,
    pub tau: DMatrix<f64>,
}

/// `⌊d/√2⌋`, the leading block size of the dense designs.
pub fn block_size(d: usize) -> usize {
    (d as f64 / std::f64::consts::SQRT_2).floor() as usize
}

impl TauModel {
    pub fn d(&self) -> usize {
        self.tau.nrows()
    }

    pub fn custom(tau: DMatrix<f64>) -> Result<Self> {
        if !tau.is_square() || tau.nrows() < 1 {
            return Err(Error::Dimension("tau matrix must be square and nonempty".into()));
        }
        for i in 0..tau.nrows() {
            if tau[(i, i)] != 1.0 {
                return Err(Error::param(format!("tau diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                let v = tau[(i, j)];
                if v != tau[(j, i)] || !(-1.0..=1.0).contains(&v) {
                    return Err(Error::param(format!("tau entry ({i}, {j}) is invalid")));
                }
            }
        }
        Ok(Self {
            design: Design::Custom,
            tau,
        })
    }

    /// The largest off-diagonal `|τ_ij|`, i.e. `‖vech(τ)‖∞`.
    pub fn max_off_diagonal(&self) -> f64 {
        let d = self.d();
        let mut m = 0.0f64;
        for i in 0..d {
            for j in i + 1..d {
                m = m.max(self.tau[(i, j)].abs());
            }
        }
        m
    }
}

pub fn build_tau(design: Design, d: usize) -> Result<TauModel> {
    let m = block_size(d);
    let mut tau = DMatrix::identity(d, d);
    match design {
        Design::F1 | Design::U1 | Design::U2 if m < 2 => {
            return Err(Error::param(format!("design {design} needs floor(d/sqrt 2) >= 2, got d = {d}")));
        }
        Design::F2 if d < 3 => {
            return Err(Error::param(format!("design F2 needs d >= 3, got {d}")));
        }
        Design::Custom => {
            return Err(Error::param("custom designs are built with TauModel::custom"));
        }
        Design::F1 => fill_block(&mut tau, 0, m, 0.5),
        Design::F2 => fill_block(&mut tau, 0, 3, 0.5),
        Design::U1 => {
            let b: Vec<f64> = (0..m)
                .map(|j| 0.01 + j as f64 * (0.99 - 0.01) / (m - 1) as f64)
                .collect();
            // b is increasing, so the largest product over i < j is b[m-2]·b[m-1]
            let scale = (0.5 / (b[m - 2] * b[m - 1])).sqrt();
            let a: Vec<f64> = b.iter().map(|v| v * scale).collect();
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        tau[(i, j)] = a[i] * a[j];
                    }
                }
            }
        }
        Design::U2 => {
            fill_block(&mut tau, 0, m, 0.5);
            fill_block(&mut tau, m, d, 0.25);
        }
    }
    Ok(TauModel { design, tau })
}

fn fill_block(tau: &mut DMatrix<f64>, start: usize, end: usize, value: f64) {
    for i in start..end {
        for j in start..end {
            if i != j {
                tau[(i, j)] = value;
            }
        }
    }
}

/// `Γ_ij = sin(π τ_ij / 2)`.
pub fn copula_correlation(tau: &DMatrix<f64>) -> DMatrix<f64> {
    tau.map(|t| (std::f64::consts::FRAC_PI_2 * t).sin())
}

/// Clips negative eigenvalues and rescales to unit diagonal. Returns the
/// repaired matrix and its Frobenius distance from the input.
pub fn repair_correlation(gamma: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let eig = SymmetricEigen::new(gamma.clone());
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return Ok((gamma.clone(), 0.0));
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let m = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d = m.nrows();
    let diag: Vec<f64> = (0..d).map(|i| m[(i, i)]).collect();
    if diag.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Numerical("repaired correlation has a zero variance".into()));
    }
    let mut out = DMatrix::from_fn(d, d, |i, j| m[(i, j)] / (diag[i] * diag[j]).sqrt());
    out = (&out + out.transpose()) * 0.5;
    for i in 0..d {
        out[(i, i)] = 1.0;
    }
    let dist = (&out - gamma).norm();
    Ok((out, dist))
}

/// Draws rows of `N_d(0, Γ)` whose Kendall's tau matrix is the model's.
#[derive(Debug, Clone)]
pub struct CopulaSampler {
    factor: DMatrix<f64>,
}

impl CopulaSampler {
    pub fn new(model: &TauModel) -> Result<Self> {
        let (gamma, dist) = repair_correlation(&copula_correlation(&model.tau))?;
        if dist > REPAIR_TOLERANCE {
            return Err(Error::Numerical(format!(
                "sin(pi tau / 2) is indefinite: repair moves it by {dist:.3e}"
            )));
        }
        let factor = match Cholesky::new(gamma.clone()) {
            Some(c) => c.l(),
            None => {
                let eig = SymmetricEigen::new(gamma);
                &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()))
            }
        };
        Ok(Self { factor })
    }

    pub fn d(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DataMatrix> {
        let d = self.d();
        let mut cols = vec![0.0; n * d];
        let mut z = vec![0.0; d];
        for i in 0..n {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            for r in 0..d {
                let mut s = 0.0;
                for c in 0..d {
                    s += self.factor[(r, c)] * z[c];
                }
                cols[r * n + i] = s;
            }
        }
        DataMatrix::from_columns(n, d, cols)
    }
}

pub fn sample_copula<R: Rng + ?Sized>(model: &TauModel, n: usize, rng: &mut R) -> Result<DataMatrix> {
    CopulaSampler::new(model)?.sample(n, rng)
}
