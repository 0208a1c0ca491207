use rand::RngCore;

use super::{standard_normals, ChainState, Kernel, KernelOutcome};
use crate::directions::DirectionLaw;
use crate::engine::{RoundLedger, ZoEngine, DIVERGENCE_NORM};
use crate::error::{Error, Result};
use crate::targets::Potential;

/// Zeroth-order unadjusted Langevin:
/// `X_t = X_{t−1} − γ ĝ_V(X_{t−1}) + √(2γ) Z`.
#[derive(Debug, Clone)]
pub struct ZoUla {
    pub step: f64,
    pub directions: usize,
    pub law: DirectionLaw,
}

impl ZoUla {
    pub fn new(step: f64, directions: usize, law: DirectionLaw) -> Result<Self> {
        if step < 0.0 || !step.is_finite() {
            return Err(Error::InvalidConfig(format!("ULA step must be non-negative, got {step}")));
        }
        if directions == 0 {
            return Err(Error::InvalidConfig("direction count must be positive".into()));
        }
        Ok(Self {
            step,
            directions,
            law,
        })
    }

    /// Largest step for which the coupling contraction bound applies.
    pub fn step_bound(&self, target: &dyn Potential) -> Option<f64> {
        target
            .curvature()
            .map(|c| self.directions as f64 / (c.smoothness * target.dim() as f64))
    }
}

impl Kernel for ZoUla {
    fn name(&self) -> &'static str {
        "zo-ula"
    }

    fn step(
        &self,
        target: &dyn Potential,
        state: &ChainState,
        engine: &ZoEngine,
        rng: &mut dyn RngCore,
        ledger: &mut RoundLedger,
    ) -> Result<KernelOutcome> {
        let est = engine.gradient_estimate(
            target,
            &state.x,
            state.potential,
            self.law,
            self.directions,
            rng,
            ledger,
        )?;
        let z = standard_normals(rng, state.x.len());
        let noise = (2.0 * self.step).sqrt();
        let x: Vec<f64> = state
            .x
            .iter()
            .zip(&est.full)
            .zip(&z)
            .map(|((xi, gi), zi)| xi - self.step * gi + noise * zi)
            .collect();
        let norm = super::sq_norm(&x).sqrt();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Diverged {
                step: state.t + 1,
                norm,
            });
        }
        Ok(KernelOutcome {
            state: state.advance(x, None),
            accepted: true,
            log_ratio: 0.0,
            rounds: 1,
            divergent: false,
        })
    }

    fn scale(&self) -> f64 {
        self.step
    }

    fn set_scale(&mut self, scale: f64) {
        self.step = scale;
    }

    fn target_acceptance(&self) -> Option<f64> {
        None
    }

    fn warnings(&self, target: &dyn Potential) -> Vec<String> {
        match self.step_bound(target) {
            Some(bound) if self.step > bound => vec![format!(
                "ULA step {} exceeds m/(Ld) = {bound}; contraction is not guaranteed",
                self.step
            )],
            _ => Vec::new(),
        }
    }
}
