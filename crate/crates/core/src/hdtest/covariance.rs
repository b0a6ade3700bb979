//! Private covariance release, positive-semidefinite repair, and the sign
//! adjustment applied to the jackknife before bootstrapping.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::privacy::PrivacyBudget;

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::param(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Adds one symmetric Gaussian noise matrix (upper triangle drawn, lower
/// mirrored) with entry scale `sensitivity/√(2ρ)`, debiting `ρ`.
pub fn gausscov<R: Rng + ?Sized>(
    label: &str,
    zeta: &DMatrix<f64>,
    rho: f64,
    sensitivity: f64,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    check_symmetric(zeta)?;
    if !(rho > 0.0) || !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::param(format!(
            "covariance release needs positive rho and sensitivity (got {rho}, {sensitivity})"
        )));
    }
    budget.spend(label, rho, 0.0)?;
    let sigma = if rho.is_infinite() {
        0.0
    } else {
        sensitivity / (2.0 * rho).sqrt()
    };
    let k = zeta.nrows();
    let mut out = zeta.clone();
    for i in 0..k {
        for j in i..k {
            let z: f64 = rng.sample(StandardNormal);
            let v = zeta[(i, j)] + sigma * z;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// The nearest PSD matrix together with a square-root factor `F`,
/// `matrix = F Fᵀ`.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    pub matrix: DMatrix<f64>,
    pub factor: DMatrix<f64>,
}

pub fn psd_factor(zeta: &DMatrix<f64>) -> Result<PsdFactor> {
    check_symmetric(zeta)?;
    if zeta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite covariance entry".into()));
    }
    let eig = SymmetricEigen::new(zeta.clone());
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let factor = &eig.eigenvectors * DMatrix::from_diagonal(&clipped.map(f64::sqrt));
    let matrix = if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        zeta.clone()
    } else {
        let m = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        (&m + m.transpose()) * 0.5
    };
    Ok(PsdFactor { matrix, factor })
}

/// Clips negative eigenvalues to zero: the Frobenius-nearest PSD matrix.
pub fn psd_project(zeta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(psd_factor(zeta)?.matrix)
}

/// `S_ij = sign(U_i U_j)` over a coordinate subset, with `sign(0) = +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignMatrix {
    s: DMatrix<f64>,
}

impl SignMatrix {
    pub fn from_statistic(u: &[f64], indices: &[usize]) -> Self {
        let k = indices.len();
        let s = DMatrix::from_fn(k, k, |a, b| {
            if u[indices[a]] * u[indices[b]] < 0.0 {
                -1.0
            } else {
                1.0
            }
        });
        Self { s }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// `S ⊙ ζ`.
    pub fn apply(&self, zeta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if zeta.shape() != self.s.shape() {
            return Err(Error::Dimension(format!(
                "sign matrix is {}x{}, covariance {}x{}",
                self.s.nrows(),
                self.s.ncols(),
                zeta.nrows(),
                zeta.ncols()
            )));
        }
        Ok(self.s.component_mul(zeta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    fn min_eig(m: &DMatrix<f64>) -> f64 {
        SymmetricEigen::new(m.clone()).eigenvalues.min()
    }

    #[test]
    fn gausscov_noiseless_and_symmetric() {
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let mut b = PrivacyBudget::unlimited();
        let out = gausscov("cov", &z, f64::INFINITY, 1.0, &mut b, &mut Seed(0).stream(0)).unwrap();
        assert_eq!(out, z);
        let mut b = PrivacyBudget::new(1.0, 0.0).unwrap();
        let out = gausscov("cov", &z, 0.5, 1.0, &mut b, &mut Seed(0).stream(0)).unwrap();
        let noise = &out - &z;
        assert_eq!(noise, noise.transpose());
        assert_eq!(b.spent().0, 0.5);
        assert!(gausscov("cov", &z, 0.6, 1.0, &mut b, &mut Seed(0).stream(0)).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 2.0]);
        assert!(gausscov("cov", &asym, 0.1, 1.0, &mut PrivacyBudget::unlimited(), &mut Seed(0).stream(0)).is_err());
    }

    #[test]
    fn gausscov_off_diagonal_scale() {
        let z = DMatrix::zeros(2, 2);
        let (sens, rho) = (0.7, 0.4);
        let target = sens / (2.0f64 * rho).sqrt();
        let mut rng = Seed(11).stream(0);
        let mut b = PrivacyBudget::unlimited();
        let draws: Vec<f64> = (0..10_000)
            .map(|_| gausscov("cov", &z, rho, sens, &mut b, &mut rng).unwrap()[(0, 1)])
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((var.sqrt() / target - 1.0).abs() < 0.02, "{}", var.sqrt());
    }

    #[test]
    fn projection_examples() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
        let p = psd_project(&d).unwrap();
        assert!((p - DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]))).amax() < 1e-15);

        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 0.5]);
        assert_eq!(psd_project(&a).unwrap(), a);
        let f = psd_factor(&a).unwrap();
        assert!((&f.factor * f.factor.transpose() - &a).amax() < 1e-12);
    }

    #[test]
    fn noisy_projection_is_psd_and_idempotent() {
        let mut rng = Seed(3).stream(0);
        let mut b = PrivacyBudget::unlimited();
        for _ in 0..50 {
            let z = DMatrix::identity(5, 5) * 0.1;
            let noisy = gausscov("cov", &z, 0.5, 1.0, &mut b, &mut rng).unwrap();
            let p = psd_project(&noisy).unwrap();
            assert_eq!(p, p.transpose());
            assert!(min_eig(&p) >= -1e-10);
            let q = psd_project(&p).unwrap();
            assert!((&q - &p).amax() < 1e-10);
        }
    }

    #[test]
    fn signs() {
        let u = [0.4, -0.3, 0.0, 0.2];
        let s = SignMatrix::from_statistic(&u, &[0, 1, 2]);
        let m = s.matrix();
        assert_eq!(m, &m.transpose());
        assert_eq!((m[(0, 0)], m[(1, 1)], m[(2, 2)]), (1.0, 1.0, 1.0));
        assert_eq!((m[(0, 1)], m[(1, 2)], m[(0, 2)]), (-1.0, 1.0, 1.0));
        let z = DMatrix::from_fn(3, 3, |i, j| 1.0 + (i + j) as f64);
        let sz = s.apply(&z).unwrap();
        assert_eq!(sz.diagonal(), z.diagonal());
        assert!(s.apply(&DMatrix::zeros(2, 2)).is_err());
    }
}
