//! Random-slice zeroth-order HMC.
//!
//! Each step draws `V` and a slice momentum `k ~ N(0, I_m)`, then runs
//! leapfrog on `s ↦ U(x + Vs)` starting at `s₀ = 0` with finite-difference
//! slice gradients recomputed at every position. The final momentum is
//! negated, which makes the map `(s₀, k) ↦ (s_L, k'_L)` an involution.
//! With `L = 1` this is RS-MALA.

use nalgebra::DMatrix;
use rand::RngCore;

use super::{
    check_scale, is_divergence, metropolis_accept, rejected, sq_norm, standard_normals, ChainState,
    Kernel, KernelOutcome,
};
use crate::directions::{DirectionLaw, DirectionMatrix};
use crate::engine::{exact_slice_gradient, FiniteDiffConfig, RoundLedger, ZoEngine};
use crate::error::{Error, Result};
use crate::targets::{GradientOracle, Potential};

/// End point of a leapfrog trajectory in slice coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LeapfrogEnd {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
    pub start_potential: f64,
    pub end_potential: f64,
}

/// `L` leapfrog steps of size `step` from `(s₀, k)`, ending with a momentum
/// flip. `grad(s)` returns the slice gradient and the potential at `s`; it is
/// called exactly `L + 1` times.
pub fn leapfrog<F>(s0: &[f64], k: &[f64], step: f64, steps: usize, mut grad: F) -> Result<LeapfrogEnd>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, f64)>,
{
    let (g, start_potential) = grad(s0)?;
    let mut p: Vec<f64> = k.iter().zip(&g).map(|(ki, gi)| ki - 0.5 * step * gi).collect();
    let mut s = s0.to_vec();
    let mut end_potential = start_potential;
    for l in 1..=steps {
        for (si, pi) in s.iter_mut().zip(&p) {
            *si += step * pi;
        }
        let (g, u) = grad(&s)?;
        end_potential = u;
        if l < steps {
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi -= step * gi;
            }
        } else {
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi = -(*pi - 0.5 * step * gi);
            }
        }
    }
    Ok(LeapfrogEnd {
        position: s,
        momentum: p,
        start_potential,
        end_potential,
    })
}

#[derive(Debug, Clone)]
pub struct RsHmc {
    pub step: f64,
    pub leapfrog_steps: usize,
    pub directions: usize,
    pub law: DirectionLaw,
}

impl RsHmc {
    pub fn new(step: f64, leapfrog_steps: usize, directions: usize, law: DirectionLaw) -> Result<Self> {
        check_scale("leapfrog step", step)?;
        if leapfrog_steps == 0 {
            return Err(Error::InvalidConfig("leapfrog count must be at least 1".into()));
        }
        if directions == 0 {
            return Err(Error::InvalidConfig("direction count must be positive".into()));
        }
        Ok(Self {
            step,
            leapfrog_steps,
            directions,
            law,
        })
    }

    /// RS-HMC with a single leapfrog step.
    pub fn rs_mala(step: f64, directions: usize, law: DirectionLaw) -> Result<Self> {
        Self::new(step, 1, directions, law)
    }
}

impl Kernel for RsHmc {
    fn name(&self) -> &'static str {
        if self.leapfrog_steps == 1 {
            "rs-mala"
        } else {
            "rs-hmc"
        }
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
        let k = standard_normals(rng, self.directions);

        let mut known = state.potential;
        let mut rounds = 0u64;
        let mut end_point = Vec::new();
        let traj = leapfrog(&vec![0.0; self.directions], &k, self.step, self.leapfrog_steps, |s| {
            rounds += 1;
            let (point, base) = if rounds == 1 {
                (state.x.clone(), known.take())
            } else {
                (v.offset(&state.x, s)?, None)
            };
            let sd = engine.directional_derivatives(target, &point, base, &v, ledger)?;
            end_point = point;
            Ok((sd.values, sd.base))
        });

        let traj = match traj {
            Ok(t) => t,
            Err(e) if is_divergence(&e) => {
                metropolis_accept(f64::NEG_INFINITY, rng);
                return Ok(rejected(state, f64::NEG_INFINITY, rounds, true));
            }
            Err(e) => return Err(e),
        };

        let log_ratio = traj.start_potential - traj.end_potential
            + 0.5 * (sq_norm(&k) - sq_norm(&traj.momentum));
        let accepted = metropolis_accept(log_ratio, rng);
        // end_point = x + V s_L, i.e. the slice update of x to Vᵀx + s_L
        let next = if accepted {
            state.advance(end_point, Some(traj.end_potential))
        } else {
            ChainState {
                potential: Some(traj.start_potential),
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

    fn scale(&self) -> f64 {
        self.step
    }

    fn set_scale(&mut self, scale: f64) {
        self.step = scale;
    }

    fn target_acceptance(&self) -> Option<f64> {
        Some(if self.leapfrog_steps == 1 { 0.574 } else { 0.651 })
    }

    fn leapfrog_steps(&self) -> usize {
        self.leapfrog_steps
    }
}

/// How slice gradients are obtained in [`leapfrog_involution_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceGradientMode {
    /// `Vᵀ∇U(x + Vs)` from the test oracle.
    Analytic,
    FiniteDifference { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvolutionReport {
    /// `‖T_L(T_L(s₀, k)) − (s₀, k)‖_∞`.
    pub involution_deviation: f64,
    /// `|log |det J_{T_L}(s₀, k)||` from a central-difference Jacobian.
    pub log_abs_det: f64,
}

/// Applies the leapfrog map twice and measures how far it is from an
/// involution, and how far its numerical Jacobian determinant is from 1.
#[allow(clippy::too_many_arguments)]
pub fn leapfrog_involution_check(
    target: &dyn GradientOracle,
    x: &[f64],
    v: &DirectionMatrix,
    s0: &[f64],
    k: &[f64],
    step: f64,
    steps: usize,
    mode: SliceGradientMode,
) -> Result<InvolutionReport> {
    let m = v.count();
    crate::error::check_dim(m, s0.len())?;
    crate::error::check_dim(m, k.len())?;
    let engine = match mode {
        SliceGradientMode::Analytic => None,
        SliceGradientMode::FiniteDifference { epsilon } => Some(ZoEngine::new(FiniteDiffConfig {
            epsilon,
            workers: 1,
        })?),
    };
    let map = |s: &[f64], p: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut ledger = RoundLedger::default();
        let end = leapfrog(s, p, step, steps, |s| {
            let point = v.offset(x, s)?;
            match &engine {
                None => Ok((exact_slice_gradient(target, &point, v)?, target.value(&point))),
                Some(e) => {
                    let sd = e.directional_derivatives(target, &point, None, v, &mut ledger)?;
                    Ok((sd.values, sd.base))
                }
            }
        })?;
        Ok((end.position, end.momentum))
    };

    let (s1, k1) = map(s0, k)?;
    let (s2, k2) = map(&s1, &k1)?;
    let involution_deviation = s2
        .iter()
        .zip(s0)
        .chain(k2.iter().zip(k))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let h = 1e-5;
    let mut jac = DMatrix::zeros(2 * m, 2 * m);
    let base: Vec<f64> = s0.iter().chain(k).copied().collect();
    for col in 0..2 * m {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[col] += h;
        minus[col] -= h;
        let (sp, kp) = map(&plus[..m], &plus[m..])?;
        let (sm, km) = map(&minus[..m], &minus[m..])?;
        for (row, (a, b)) in sp.iter().chain(&kp).zip(sm.iter().chain(&km)).enumerate() {
            jac[(row, col)] = (a - b) / (2.0 * h);
        }
    }
    let det = jac.determinant();
    Ok(InvolutionReport {
        involution_deviation,
        log_abs_det: det.abs().ln().abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::GaussianTarget;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_step_is_momentum_flip() {
        let t = GaussianTarget::standard(3);
        let v = DirectionMatrix::from_indices(3, vec![0, 2]).unwrap();
        let end = leapfrog(&[0.5, -0.2], &[1.0, 2.0], 0.0, 4, |s| {
            let p = v.offset(&[1.0, 1.0, 1.0], s)?;
            Ok((exact_slice_gradient(&t, &p, &v)?, t.value(&p)))
        })
        .unwrap();
        assert_eq!(end.position, vec![0.5, -0.2]);
        assert_eq!(end.momentum, vec![-1.0, -2.0]);
    }

    #[test]
    fn gradient_called_l_plus_one_times() {
        let mut calls = 0;
        leapfrog(&[0.0], &[1.0], 0.1, 5, |_| {
            calls += 1;
            Ok((vec![0.0], 0.0))
        })
        .unwrap();
        assert_eq!(calls, 6);
    }

    #[test]
    fn rounds_per_step_are_l_plus_one() {
        let t = GaussianTarget::standard(6);
        let k = RsHmc::new(0.3, 4, 2, DirectionLaw::CanonicalSubset).unwrap();
        let engine = ZoEngine::sequential();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ledger = RoundLedger::default();
        let mut s = ChainState::with_potential(vec![0.1; 6], t.value(&[0.1; 6]));
        for _ in 0..20 {
            let o = k.step(&t, &s, &engine, &mut rng, &mut ledger).unwrap();
            assert_eq!(o.rounds, 5);
            assert!(o.state.potential.is_some());
            s = o.state;
        }
        assert_eq!(ledger.rounds, 100);
        // base known on the first round, m + 1 evaluations on the other L
        assert_eq!(ledger.evals, 20 * (2 + 4 * 3));
    }

    #[test]
    fn names_follow_leapfrog_count() {
        assert_eq!(RsHmc::rs_mala(0.1, 2, DirectionLaw::CanonicalSubset).unwrap().name(), "rs-mala");
        let h = RsHmc::new(0.1, 3, 2, DirectionLaw::CanonicalSubset).unwrap();
        assert_eq!(h.name(), "rs-hmc");
        assert_eq!(h.target_acceptance(), Some(0.651));
    }
}
