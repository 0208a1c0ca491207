//! Markov kernels and the chain runner.
//!
//! | kernel            | rounds per step        | target acceptance |
//! |-------------------|------------------------|-------------------|
//! | RWM               | 1                      | 0.234             |
//! | ZO-ULA            | 1                      | (unadjusted)      |
//! | naive ZO-MALA     | 2                      | 0.574             |
//! | RS-HMC, `L` steps | `L + 1`                | 0.574 if `L = 1`, else 0.651 |
//! | MTM, `m` tries    | 2 (1 when `m = 1`)     | 0.234             |

mod adapt;
mod chain;
mod hmc;
mod mala;
mod mtm;
mod precondition;
mod rwm;
mod ula;

pub use adapt::{adapt_scale, AdaptationConfig};
pub use chain::{run_chain, run_chain_with, ChainDiagnostics, ChainRun, KernelKind, SamplerConfig};
pub use hmc::{
    leapfrog, leapfrog_involution_check, InvolutionReport, LeapfrogEnd, RsHmc, SliceGradientMode,
};
pub use mala::NaiveZoMala;
pub use mtm::Mtm;
pub use precondition::{Preconditioned, Pullback};
pub use rwm::Rwm;
pub use ula::ZoUla;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::engine::{RoundLedger, ZoEngine};
use crate::error::Result;
use crate::targets::Potential;

/// Current position with its potential, when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub x: Vec<f64>,
    /// `Some(U(x))` whenever a kernel has evaluated it. Metropolis-adjusted
    /// kernels always return `Some`; ZO-ULA moves without evaluating the
    /// new point and returns `None`.
    pub potential: Option<f64>,
    pub t: usize,
}

impl ChainState {
    pub fn new(x: Vec<f64>) -> Self {
        Self {
            x,
            potential: None,
            t: 0,
        }
    }

    pub fn with_potential(x: Vec<f64>, potential: f64) -> Self {
        Self {
            x,
            potential: Some(potential),
            t: 0,
        }
    }

    pub(crate) fn advance(&self, x: Vec<f64>, potential: Option<f64>) -> Self {
        Self {
            x,
            potential,
            t: self.t + 1,
        }
    }

    pub(crate) fn stay(&self) -> Self {
        Self {
            x: self.x.clone(),
            potential: self.potential,
            t: self.t + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelOutcome {
    pub state: ChainState,
    pub accepted: bool,
    /// Log Metropolis–Hastings ratio of the proposal (`0` for unadjusted
    /// moves, `-inf` for divergent proposals).
    pub log_ratio: f64,
    pub rounds: u64,
    pub divergent: bool,
}

/// One Markov transition.
pub trait Kernel: Send + Sync {
    fn name(&self) -> &'static str;

    fn step(
        &self,
        target: &dyn Potential,
        state: &ChainState,
        engine: &ZoEngine,
        rng: &mut dyn RngCore,
        ledger: &mut RoundLedger,
    ) -> Result<KernelOutcome>;

    /// The tunable proposal scale (`σ` or leapfrog step).
    fn scale(&self) -> f64;

    fn set_scale(&mut self, scale: f64);

    /// `None` for unadjusted kernels, which are never adapted.
    fn target_acceptance(&self) -> Option<f64>;

    fn leapfrog_steps(&self) -> usize {
        1
    }

    /// Non-fatal configuration concerns for this target.
    fn warnings(&self, _target: &dyn Potential) -> Vec<String> {
        Vec::new()
    }
}

/// Metropolis decision. Always consumes exactly one uniform so that rng
/// streams stay aligned between accepted and rejected steps.
pub(crate) fn metropolis_accept(log_ratio: f64, rng: &mut dyn RngCore) -> bool {
    let u: f64 = rng.random();
    log_ratio >= 0.0 || u.ln() < log_ratio
}

pub(crate) fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

pub(crate) fn standard_normals(rng: &mut dyn RngCore, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect()
}

pub(crate) fn rejected(state: &ChainState, log_ratio: f64, rounds: u64, divergent: bool) -> KernelOutcome {
    KernelOutcome {
        state: state.stay(),
        accepted: false,
        log_ratio,
        rounds,
        divergent,
    }
}

/// Non-finite potentials are reported by the engine as errors; kernels treat
/// them as divergent proposals.
pub(crate) fn is_divergence(e: &crate::error::Error) -> bool {
    use crate::error::Error;
    matches!(e, Error::NonFiniteBase | Error::NonFiniteDirection { .. })
}

pub(crate) fn check_scale(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(crate::error::Error::InvalidConfig(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}
