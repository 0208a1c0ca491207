//! Potentials `U(x) = -log π(x)` exposed through a zeroth-order oracle.
//!
//! Samplers only ever see [`Potential`]. Analytic gradients live behind the
//! separate [`GradientOracle`] trait so that tests can check finite
//! differences against them without the samplers gaining first-order access.
//!
//! Every implementation is immutable after construction and must be safe to
//! evaluate from many worker threads at once.

mod data;
mod gaussian;
mod logistic;
mod stochvol;
mod synthetic;

pub use data::{generate_logistic_data, generate_sv_data, LogisticDataset, SvDataset};
pub use gaussian::GaussianTarget;
pub use logistic::LogisticRegressionTarget;
pub use stochvol::StochasticVolatilityTarget;
pub use synthetic::{FlatTarget, LatencyTarget, Shifted, SpinTarget};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};

/// Strong convexity `λ` and smoothness `L` of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Curvature {
    pub convexity: f64,
    pub smoothness: f64,
}

impl Curvature {
    pub fn new(convexity: f64, smoothness: f64) -> Result<Self> {
        if !(convexity > 0.0 && smoothness >= convexity && smoothness.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "curvature constants must satisfy 0 < λ <= L, got λ={convexity}, L={smoothness}"
            )));
        }
        Ok(Self {
            convexity,
            smoothness,
        })
    }

    pub fn condition_number(&self) -> f64 {
        self.smoothness / self.convexity
    }
}

/// A zeroth-order oracle for a potential on `R^d`.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    /// Evaluates `U(x)` without validating `x`. This is the hot path used by
    /// the round executor; use [`evaluate_potential`] at API boundaries.
    fn value(&self, x: &[f64]) -> f64;

    /// Known `(λ, L)` pair, if any.
    fn curvature(&self) -> Option<Curvature> {
        None
    }
}

/// Test-oracle access to `∇U`. Never required by any sampler.
pub trait GradientOracle: Potential {
    fn gradient(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported("target provides no analytic gradient"))
    }
}

/// Checked evaluation of `U(x)`.
pub fn evaluate_potential<P: Potential + ?Sized>(target: &P, x: &[f64]) -> Result<f64> {
    check_dim(target.dim(), x.len())?;
    check_finite(x)?;
    Ok(target.value(x))
}

/// Checked evaluation of `∇U(x)` through the test oracle.
pub fn analytic_gradient<P: GradientOracle + ?Sized>(target: &P, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(target.dim(), x.len())?;
    check_finite(x)?;
    target.gradient(x)
}

impl<P: Potential + ?Sized> Potential for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn curvature(&self) -> Option<Curvature> {
        (**self).curvature()
    }
}

impl<P: GradientOracle + ?Sized> GradientOracle for &P {
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).gradient(x)
    }
}

/// The built-in targets behind one type, for configuration-driven use.
#[derive(Debug, Clone)]
pub enum TargetModel {
    Gaussian(GaussianTarget),
    Logistic(LogisticRegressionTarget),
    StochasticVolatility(StochasticVolatilityTarget),
}

impl TargetModel {
    pub fn name(&self) -> &'static str {
        match self {
            TargetModel::Gaussian(_) => "gaussian",
            TargetModel::Logistic(_) => "logistic",
            TargetModel::StochasticVolatility(_) => "stochvol",
        }
    }
}

impl Potential for TargetModel {
    fn dim(&self) -> usize {
        match self {
            TargetModel::Gaussian(t) => t.dim(),
            TargetModel::Logistic(t) => t.dim(),
            TargetModel::StochasticVolatility(t) => t.dim(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            TargetModel::Gaussian(t) => t.value(x),
            TargetModel::Logistic(t) => t.value(x),
            TargetModel::StochasticVolatility(t) => t.value(x),
        }
    }

    fn curvature(&self) -> Option<Curvature> {
        match self {
            TargetModel::Gaussian(t) => t.curvature(),
            TargetModel::Logistic(t) => t.curvature(),
            TargetModel::StochasticVolatility(t) => t.curvature(),
        }
    }
}

impl GradientOracle for TargetModel {
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            TargetModel::Gaussian(t) => t.gradient(x),
            TargetModel::Logistic(t) => t.gradient(x),
            TargetModel::StochasticVolatility(t) => t.gradient(x),
        }
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
