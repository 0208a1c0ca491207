use nalgebra::DMatrix;

use super::{dot, Curvature, GradientOracle, Potential};
use crate::error::{check_dim, Error, Result};

/// Bayesian logistic regression with prior `β ~ N(0, σ²_prior I)`:
///
/// `U(β) = Σᵢ [log(1 + exp(zᵢᵀβ)) − yᵢ zᵢᵀβ] + βᵀβ / (2σ²_prior)`.
#[derive(Debug, Clone)]
pub struct LogisticRegressionTarget {
    n: usize,
    d: usize,
    // row-major n×d design
    design: Vec<f64>,
    responses: Vec<f64>,
    prior_variance: f64,
    curvature: Curvature,
}

/// `log(1 + e^t)` without overflow.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticRegressionTarget {
    /// Prior variance defaults to `25 / d`.
    pub fn new(n: usize, d: usize, design: Vec<f64>, responses: Vec<f64>) -> Result<Self> {
        Self::with_prior_variance(n, d, design, responses, 25.0 / d as f64)
    }

    pub fn with_prior_variance(
        n: usize,
        d: usize,
        design: Vec<f64>,
        responses: Vec<f64>,
        prior_variance: f64,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidConfig("n and d must be positive".into()));
        }
        check_dim(n * d, design.len())?;
        check_dim(n, responses.len())?;
        if responses.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidConfig("responses must be 0 or 1".into()));
        }
        if !(prior_variance > 0.0 && prior_variance.is_finite()) {
            return Err(Error::InvalidConfig("prior variance must be positive".into()));
        }
        let z = DMatrix::from_row_slice(n, d, &design);
        let gram = z.transpose() * &z;
        let top = gram.symmetric_eigen().eigenvalues.max().max(0.0);
        let lambda = 1.0 / prior_variance;
        Ok(Self {
            n,
            d,
            design,
            responses,
            prior_variance,
            curvature: Curvature::new(lambda, lambda + 0.25 * top)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prior_variance(&self) -> f64 {
        self.prior_variance
    }

    pub fn design_row(&self, i: usize) -> &[f64] {
        &self.design[i * self.d..(i + 1) * self.d]
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    /// Hessian of the likelihood part, `Σᵢ s(1−s) zᵢzᵢᵀ`. Used only to check
    /// convexity in tests.
    pub fn data_hessian(&self, beta: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.d, self.d);
        for i in 0..self.n {
            let z = self.design_row(i);
            let s = sigmoid(dot(z, beta));
            let w = s * (1.0 - s);
            for a in 0..self.d {
                for b in 0..self.d {
                    h[(a, b)] += w * z[a] * z[b];
                }
            }
        }
        h
    }
}

impl Potential for LogisticRegressionTarget {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, beta: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, &y) in self.responses.iter().enumerate() {
            let t = dot(self.design_row(i), beta);
            total += softplus(t) - y * t;
        }
        total + dot(beta, beta) / (2.0 * self.prior_variance)
    }

    fn curvature(&self) -> Option<Curvature> {
        Some(self.curvature)
    }
}

impl GradientOracle for LogisticRegressionTarget {
    fn gradient(&self, beta: &[f64]) -> Result<Vec<f64>> {
        let mut g: Vec<f64> = beta.iter().map(|b| b / self.prior_variance).collect();
        for (i, &y) in self.responses.iter().enumerate() {
            let z = self.design_row(i);
            let r = sigmoid(dot(z, beta)) - y;
            for (gj, zj) in g.iter_mut().zip(z) {
                *gj += r * zj;
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{analytic_gradient, evaluate_potential};

    fn single() -> LogisticRegressionTarget {
        LogisticRegressionTarget::with_prior_variance(1, 1, vec![1.0], vec![1.0], 25.0).unwrap()
    }

    #[test]
    fn hand_values_at_origin() {
        let t = single();
        let u = evaluate_potential(&t, &[0.0]).unwrap();
        assert!((u - std::f64::consts::LN_2).abs() < 1e-15);
        let g = analytic_gradient(&t, &[0.0]).unwrap();
        assert!((g[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
    }

    #[test]
    fn default_prior_variance_is_25_over_d() {
        let t = LogisticRegressionTarget::new(2, 5, vec![0.1; 10], vec![0.0, 1.0]).unwrap();
        assert!((t.prior_variance() - 5.0).abs() < 1e-15);
        let c = t.curvature().unwrap();
        assert!((c.convexity - 0.2).abs() < 1e-15);
        assert!(c.smoothness >= c.convexity);
    }

    #[test]
    fn rejects_non_binary_responses() {
        assert!(LogisticRegressionTarget::new(1, 1, vec![1.0], vec![0.5]).is_err());
    }
}
