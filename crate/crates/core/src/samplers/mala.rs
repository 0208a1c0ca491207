use rand::RngCore;

use super::{
    check_scale, is_divergence, metropolis_accept, rejected, sq_norm, standard_normals, ChainState,
    Kernel, KernelOutcome,
};
use crate::directions::DirectionLaw;
use crate::engine::{RoundLedger, ZoEngine};
use crate::error::{Error, Result};
use crate::targets::Potential;

/// Plug-in zeroth-order MALA. The proposal is full-dimensional,
/// `y ~ N(x − (σ²/2)ĝ_V(x), σ²I)`, and the reverse density uses the same `V`.
#[derive(Debug, Clone)]
pub struct NaiveZoMala {
    pub scale: f64,
    pub directions: usize,
    pub law: DirectionLaw,
}

impl NaiveZoMala {
    pub fn new(scale: f64, directions: usize, law: DirectionLaw) -> Result<Self> {
        check_scale("proposal scale", scale)?;
        if directions == 0 {
            return Err(Error::InvalidConfig("direction count must be positive".into()));
        }
        Ok(Self {
            scale,
            directions,
            law,
        })
    }
}

impl Kernel for NaiveZoMala {
    fn name(&self) -> &'static str {
        "naive-mala"
    }

    fn step(
        &self,
        target: &dyn Potential,
        state: &ChainState,
        engine: &ZoEngine,
        rng: &mut dyn RngCore,
        ledger: &mut RoundLedger,
    ) -> Result<KernelOutcome> {
        let d = state.x.len();
        let v = self.law.sample(rng, d, self.directions)?;
        let z = standard_normals(rng, d);
        let var = self.scale * self.scale;

        let fwd = match engine.estimate_along(target, &state.x, state.potential, v, ledger) {
            Ok(e) => e,
            Err(e) if is_divergence(&e) => {
                metropolis_accept(f64::NEG_INFINITY, rng);
                return Ok(rejected(state, f64::NEG_INFINITY, 1, true));
            }
            Err(e) => return Err(e),
        };
        let ux = fwd.base;
        let y: Vec<f64> = state
            .x
            .iter()
            .zip(&fwd.full)
            .zip(&z)
            .map(|((xi, gi), zi)| xi - 0.5 * var * gi + self.scale * zi)
            .collect();

        let rev = match engine.estimate_along(target, &y, None, fwd.directions, ledger) {
            Ok(e) => e,
            Err(e) if is_divergence(&e) => {
                metropolis_accept(f64::NEG_INFINITY, rng);
                let mut out = rejected(state, f64::NEG_INFINITY, 2, true);
                out.state.potential = Some(ux);
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
        let uy = rev.base;

        // log q(x→y) = −‖σz‖²/(2σ²), log q(y→x) = −‖x − y + (σ²/2)ĝ(y)‖²/(2σ²)
        let fwd_log_q = -0.5 * sq_norm(&z);
        let back: Vec<f64> = state
            .x
            .iter()
            .zip(&y)
            .zip(&rev.full)
            .map(|((xi, yi), gi)| xi - yi + 0.5 * var * gi)
            .collect();
        let rev_log_q = -sq_norm(&back) / (2.0 * var);
        let log_ratio = ux - uy + rev_log_q - fwd_log_q;

        let accepted = metropolis_accept(log_ratio, rng);
        let next = if accepted {
            state.advance(y, Some(uy))
        } else {
            ChainState {
                potential: Some(ux),
                ..state.stay()
            }
        };
        Ok(KernelOutcome {
            state: next,
            accepted,
            log_ratio,
            rounds: 2,
            divergent: false,
        })
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn set_scale(&mut self, scale: f64) {
        self.scale = scale;
    }

    fn target_acceptance(&self) -> Option<f64> {
        Some(0.574)
    }
}
