use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use super::{ChainState, Kernel, KernelOutcome};
use crate::engine::{RoundLedger, ZoEngine};
use crate::error::{check_dim, Error, Result};
use crate::targets::{Curvature, Potential};

/// `y ↦ U(A⁻¹y)`.
pub struct Pullback<'a> {
    pub inner: &'a dyn Potential,
    pub inverse: &'a DMatrix<f64>,
}

impl Potential for Pullback<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, y: &[f64]) -> f64 {
        let x = self.inverse * DVector::from_column_slice(y);
        self.inner.value(x.as_slice())
    }

    fn curvature(&self) -> Option<Curvature> {
        None
    }
}

/// Runs a kernel in the reparameterized space `y = Ax` and maps the result
/// back with `x = A⁻¹y`.
pub struct Preconditioned {
    inner: Box<dyn Kernel>,
    forward: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

const PIVOT_TOLERANCE: f64 = 1e-12;

impl Preconditioned {
    pub fn new(inner: Box<dyn Kernel>, a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidConfig("preconditioner must be square".into()));
        }
        let lu = a.clone().lu();
        let u = lu.u();
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let pivot = u.diagonal().iter().map(|p| p.abs()).fold(f64::INFINITY, f64::min);
        if !(pivot > PIVOT_TOLERANCE * scale) {
            return Err(Error::Singular { pivot });
        }
        let inverse = lu.try_inverse().ok_or(Error::Singular { pivot })?;
        Ok(Self {
            inner,
            forward: a,
            inverse,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.forward
    }
}

impl Kernel for Preconditioned {
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn step(
        &self,
        target: &dyn Potential,
        state: &ChainState,
        engine: &ZoEngine,
        rng: &mut dyn RngCore,
        ledger: &mut RoundLedger,
    ) -> Result<KernelOutcome> {
        check_dim(self.forward.nrows(), state.x.len())?;
        let pulled = Pullback {
            inner: target,
            inverse: &self.inverse,
        };
        let y = &self.forward * DVector::from_column_slice(&state.x);
        let inner_state = ChainState {
            x: y.as_slice().to_vec(),
            potential: state.potential,
            t: state.t,
        };
        let mut out = self.inner.step(&pulled, &inner_state, engine, rng, ledger)?;
        out.state.x = if out.accepted && out.state.x != inner_state.x {
            (&self.inverse * DVector::from_column_slice(&out.state.x))
                .as_slice()
                .to_vec()
        } else {
            state.x.clone()
        };
        Ok(out)
    }

    fn scale(&self) -> f64 {
        self.inner.scale()
    }

    fn set_scale(&mut self, scale: f64) {
        self.inner.set_scale(scale);
    }

    fn target_acceptance(&self) -> Option<f64> {
        self.inner.target_acceptance()
    }

    fn leapfrog_steps(&self) -> usize {
        self.inner.leapfrog_steps()
    }

    fn warnings(&self, target: &dyn Potential) -> Vec<String> {
        self.inner.warnings(target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::Rwm;

    #[test]
    fn singular_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = Preconditioned::new(Box::new(Rwm::new(1.0).unwrap()), a).err().unwrap();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn pullback_composes_with_inverse() {
        let t = crate::targets::GaussianTarget::standard(2);
        let inv = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let p = Pullback {
            inner: &t,
            inverse: &inv,
        };
        assert_eq!(p.value(&[1.0, 2.0]), t.value(&[2.0, 1.0]));
    }
}
