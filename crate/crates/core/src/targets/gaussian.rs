use nalgebra::{DMatrix, DVector};

use super::{Curvature, GradientOracle, Potential};
use crate::error::{check_dim, Error, Result};

/// `U(x) = ½ (x-μ)ᵀ Λ (x-μ)` with symmetric positive definite precision `Λ`.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    mean: Vec<f64>,
    precision: DMatrix<f64>,
    // row-major copy of Λ for the evaluation loop
    rows: Vec<f64>,
    curvature: Curvature,
}

impl GaussianTarget {
    pub fn new(mean: Vec<f64>, precision: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        check_dim(d, precision.nrows())?;
        check_dim(d, precision.ncols())?;
        let asym = (&precision - precision.transpose()).amax();
        if asym > 1e-12 * precision.amax().max(1.0) {
            return Err(Error::InvalidConfig("precision matrix is not symmetric".into()));
        }
        let eig = precision.clone().symmetric_eigen();
        let lo = eig.eigenvalues.min();
        let hi = eig.eigenvalues.max();
        if lo <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "precision matrix is not positive definite (smallest eigenvalue {lo:e})"
            )));
        }
        let rows = precision.transpose().as_slice().to_vec();
        Ok(Self {
            mean,
            precision,
            rows,
            curvature: Curvature::new(lo, hi)?,
        })
    }

    /// `N(0, I_d)`.
    pub fn standard(d: usize) -> Self {
        Self::diagonal(vec![0.0; d], vec![1.0; d]).expect("identity precision is valid")
    }

    /// Independent coordinates with the given precisions.
    pub fn diagonal(mean: Vec<f64>, precisions: Vec<f64>) -> Result<Self> {
        check_dim(mean.len(), precisions.len())?;
        Self::new(mean, DMatrix::from_diagonal(&DVector::from_vec(precisions)))
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.precision
            .clone()
            .try_inverse()
            .expect("positive definite precision is invertible")
    }

    /// Symmetric square root `Λ^{1/2}`, the whitening preconditioner.
    pub fn precision_sqrt(&self) -> DMatrix<f64> {
        let eig = self.precision.clone().symmetric_eigen();
        let sqrt = eig.eigenvalues.map(f64::sqrt);
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt) * eig.eigenvectors.transpose()
    }
}

impl Potential for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d = self.mean.len();
        let r: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        let mut total = 0.0;
        for i in 0..d {
            total += r[i] * super::dot(&self.rows[i * d..(i + 1) * d], &r);
        }
        0.5 * total
    }

    fn curvature(&self) -> Option<Curvature> {
        Some(self.curvature)
    }
}

impl GradientOracle for GaussianTarget {
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.mean.len();
        let r: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok((0..d)
            .map(|i| super::dot(&self.rows[i * d..(i + 1) * d], &r))
            .collect())
    }
}
