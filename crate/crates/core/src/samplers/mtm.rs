use rand::{Rng, RngCore};

use super::{check_scale, metropolis_accept, rejected, standard_normals, ChainState, Kernel, KernelOutcome};
use crate::engine::{RoundLedger, ZoEngine};
use crate::error::{Error, Result};
use crate::targets::Potential;

/// Multiple-try Metropolis with `m` Gaussian tries and the locally balanced
/// weight `w(y|x) = √(π(y)/π(x))`.
///
/// With a symmetric proposal this weight gives the acceptance probability
/// `min(1, Σⱼ w(yⱼ|x) / Σⱼ w(x*ⱼ|y))`, where the reference set `x*` holds
/// `m − 1` fresh draws around the selected `y` plus the current point.
#[derive(Debug, Clone)]
pub struct Mtm {
    pub scale: f64,
    pub tries: usize,
}

impl Mtm {
    pub fn new(scale: f64, tries: usize) -> Result<Self> {
        check_scale("proposal scale", scale)?;
        if tries == 0 {
            return Err(Error::InvalidConfig("MTM needs at least one try".into()));
        }
        Ok(Self { scale, tries })
    }

    fn proposals(&self, rng: &mut dyn RngCore, center: &[f64], count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                let z = standard_normals(rng, center.len());
                center.iter().zip(&z).map(|(c, zi)| c + self.scale * zi).collect()
            })
            .collect()
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + v.iter().map(|a| (a - hi).exp()).sum::<f64>().ln()
}

/// `log √(π(to)/π(from)) = (U(from) − U(to))/2`, `-inf` for non-finite `U(to)`.
fn log_weight(u_from: f64, u_to: f64) -> f64 {
    if u_to.is_finite() {
        0.5 * (u_from - u_to)
    } else {
        f64::NEG_INFINITY
    }
}

impl Kernel for Mtm {
    fn name(&self) -> &'static str {
        "mtm"
    }

    fn step(
        &self,
        target: &dyn Potential,
        state: &ChainState,
        engine: &ZoEngine,
        rng: &mut dyn RngCore,
        ledger: &mut RoundLedger,
    ) -> Result<KernelOutcome> {
        let m = self.tries;
        let mut forward = self.proposals(rng, &state.x, m);
        let (ux, u_fwd) = match state.potential {
            Some(u) => (u, engine.evaluate_round(target, &forward, ledger)),
            None => {
                // the current point joins the forward round
                forward.push(state.x.clone());
                let mut u = engine.evaluate_round(target, &forward, ledger);
                forward.pop();
                let ux = u.pop().expect("base evaluation present");
                (ux, u)
            }
        };
        self.finish(target, state, ux, forward, u_fwd, engine, rng, ledger)
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

impl Mtm {
    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        target: &dyn Potential,
        state: &ChainState,
        ux: f64,
        forward: Vec<Vec<f64>>,
        u_fwd: Vec<f64>,
        engine: &ZoEngine,
        rng: &mut dyn RngCore,
        ledger: &mut RoundLedger,
    ) -> Result<KernelOutcome> {
        let m = self.tries;
        let log_w: Vec<f64> = u_fwd.iter().map(|&u| log_weight(ux, u)).collect();
        let total = log_sum_exp(&log_w);
        let pick: f64 = rng.random();
        if total == f64::NEG_INFINITY || total.is_nan() {
            metropolis_accept(f64::NEG_INFINITY, rng);
            let mut out = rejected(state, f64::NEG_INFINITY, 1, true);
            out.state.potential = Some(ux);
            return Ok(out);
        }
        // select proportionally to the weights
        let mut chosen = m - 1;
        let mut cum = 0.0;
        for (j, lw) in log_w.iter().enumerate() {
            cum += (lw - total).exp();
            if pick < cum {
                chosen = j;
                break;
            }
        }
        while log_w[chosen] == f64::NEG_INFINITY {
            chosen -= 1;
        }
        let uy = u_fwd[chosen];
        let y = forward.into_iter().nth(chosen).expect("index within tries");

        let reference = self.proposals(rng, &y, m - 1);
        let mut rounds = 1;
        let u_ref = if reference.is_empty() {
            Vec::new()
        } else {
            rounds += 1;
            engine.evaluate_round(target, &reference, ledger)
        };
        let mut log_w_ref: Vec<f64> = u_ref.iter().map(|&u| log_weight(uy, u)).collect();
        log_w_ref.push(log_weight(uy, ux));

        let log_ratio = total - log_sum_exp(&log_w_ref);
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
            rounds,
            divergent: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::FlatTarget;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_target_accepts_with_uniform_selection() {
        let k = Mtm::new(1.0, 4).unwrap();
        let t = FlatTarget::new(2, 0.0);
        let engine = ZoEngine::sequential();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut ledger = RoundLedger::default();
        let mut s = ChainState::with_potential(vec![0.0, 0.0], 0.0);
        for _ in 0..100 {
            let o = k.step(&t, &s, &engine, &mut rng, &mut ledger).unwrap();
            assert!(o.accepted);
            assert_eq!(o.log_ratio, 0.0);
            assert_eq!(o.rounds, 2);
            s = o.state;
        }
        assert_eq!(ledger.evals, 100 * (4 + 3));
    }

    #[test]
    fn selection_frequencies_are_uniform_on_flat_target() {
        // reproduce the draws to identify which try was selected
        let k = Mtm::new(1.0, 3).unwrap();
        let t = FlatTarget::new(1, 0.0);
        let engine = ZoEngine::sequential();
        let mut counts = [0usize; 3];
        for seed in 0..3000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ledger = RoundLedger::default();
            let s = ChainState::with_potential(vec![0.0], 0.0);
            let o = k.step(&t, &s, &engine, &mut rng, &mut ledger).unwrap();
            let mut replay = ChaCha8Rng::seed_from_u64(seed);
            let tries = k.proposals(&mut replay, &[0.0], 3);
            let j = tries.iter().position(|p| p[0] == o.state.x[0]).unwrap();
            counts[j] += 1;
        }
        for c in counts {
            assert!((c as f64 / 3000.0 - 1.0 / 3.0).abs() < 0.04, "{counts:?}");
        }
    }

    #[test]
    fn single_try_uses_one_round() {
        let k = Mtm::new(0.5, 1).unwrap();
        let t = FlatTarget::new(2, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ledger = RoundLedger::default();
        let s = ChainState::with_potential(vec![0.0, 0.0], 0.0);
        let o = k
            .step(&t, &s, &ZoEngine::sequential(), &mut rng, &mut ledger)
            .unwrap();
        assert_eq!(o.rounds, 1);
        assert!(o.accepted);
    }

    #[test]
    fn log_sum_exp_handles_empty_mass() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }
}
