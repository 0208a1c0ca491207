use rand::RngCore;

use super::{check_scale, metropolis_accept, standard_normals, ChainState, Kernel, KernelOutcome};
use crate::engine::{RoundLedger, ZoEngine};
use crate::error::Result;
use crate::targets::Potential;

/// Gaussian random-walk Metropolis, `y = x + σz`.
#[derive(Debug, Clone)]
pub struct Rwm {
    pub scale: f64,
}

impl Rwm {
    pub fn new(scale: f64) -> Result<Self> {
        check_scale("proposal scale", scale)?;
        Ok(Self { scale })
    }
}

impl Kernel for Rwm {
    fn name(&self) -> &'static str {
        "rwm"
    }

    fn step(
        &self,
        target: &dyn Potential,
        state: &ChainState,
        engine: &ZoEngine,
        rng: &mut dyn RngCore,
        ledger: &mut RoundLedger,
    ) -> Result<KernelOutcome> {
        let z = standard_normals(rng, state.x.len());
        let y: Vec<f64> = state.x.iter().zip(&z).map(|(a, b)| a + self.scale * b).collect();
        let (ux, uy) = match state.potential {
            Some(ux) => (ux, engine.evaluate_round(target, std::slice::from_ref(&y), ledger)[0]),
            None => {
                let pts = [y.clone(), state.x.clone()];
                let u = engine.evaluate_round(target, &pts, ledger);
                (u[1], u[0])
            }
        };
        let log_ratio = if uy.is_finite() { ux - uy } else { f64::NEG_INFINITY };
        let accepted = metropolis_accept(log_ratio, rng);
        let state = if accepted {
            state.advance(y, Some(uy))
        } else {
            ChainState {
                potential: Some(ux),
                ..state.stay()
            }
        };
        Ok(KernelOutcome {
            state,
            accepted,
            log_ratio,
            rounds: 1,
            divergent: !uy.is_finite(),
        })
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn set_scale(&mut self, scale: f64) {
        self.scale = scale;
    }

    fn target_acceptance(&self) -> Option<f64> {
        Some(0.234)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{FlatTarget, GaussianTarget};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_target_always_accepts() {
        let k = Rwm::new(3.0).unwrap();
        let t = FlatTarget::new(3, 1.5);
        let engine = ZoEngine::sequential();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ledger = RoundLedger::default();
        let mut s = ChainState::new(vec![0.0; 3]);
        for _ in 0..200 {
            let o = k.step(&t, &s, &engine, &mut rng, &mut ledger).unwrap();
            assert!(o.accepted);
            s = o.state;
        }
        // first step also evaluated the start point in the same round
        assert_eq!(ledger.rounds, 200);
        assert_eq!(ledger.evals, 201);
    }

    #[test]
    fn tiny_steps_almost_always_accept() {
        let k = Rwm::new(1e-8).unwrap();
        let t = GaussianTarget::standard(2);
        let engine = ZoEngine::sequential();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ledger = RoundLedger::default();
        let mut s = ChainState::new(vec![1.0, -1.0]);
        let mut acc = 0;
        for _ in 0..1000 {
            let o = k.step(&t, &s, &engine, &mut rng, &mut ledger).unwrap();
            acc += o.accepted as usize;
            s = o.state;
        }
        assert!(acc >= 995);
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(Rwm::new(0.0).is_err());
        assert!(Rwm::new(f64::NAN).is_err());
    }
}
