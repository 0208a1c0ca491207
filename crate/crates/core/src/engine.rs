//! Finite-difference directional derivatives executed as parallel rounds.
//!
//! A round is one batch of potential evaluations dispatched to the worker
//! pool and joined before returning. Every evaluation writes its own output
//! slot, so results are bit-identical for any worker count. Randomness is
//! only ever drawn on the coordinating thread.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directions::{DirectionLaw, DirectionMatrix};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::targets::{GradientOracle, Potential};

pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDiffConfig {
    pub epsilon: f64,
    pub workers: usize,
}

impl Default for FiniteDiffConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            workers: 1,
        }
    }
}

impl FiniteDiffConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "finite-difference step must be positive, got {}",
                self.epsilon
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("worker count must be positive".into()));
        }
        Ok(())
    }
}

/// Parallel rounds and total potential evaluations consumed so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundLedger {
    pub rounds: u64,
    pub evals: u64,
    /// Largest number of evaluations issued in a single round.
    pub widest_round: u64,
}

impl RoundLedger {
    pub fn charge(&mut self, evals: usize) {
        self.rounds += 1;
        self.evals += evals as u64;
        self.widest_round = self.widest_round.max(evals as u64);
    }

    pub fn merge(&mut self, other: &RoundLedger) {
        self.rounds += other.rounds;
        self.evals += other.evals;
        self.widest_round = self.widest_round.max(other.widest_round);
    }
}

/// Slice derivatives `(U(x+εv⁽ⁱ⁾) − U(x))/ε` together with `U(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceDerivatives {
    pub values: Vec<f64>,
    pub base: f64,
}

/// `ĝ = c_ν V g_slice` and the pieces it was built from.
#[derive(Debug, Clone)]
pub struct ZoGradientEstimate {
    pub directions: DirectionMatrix,
    pub slice: Vec<f64>,
    pub full: Vec<f64>,
    pub base: f64,
}

/// Round executor owning the worker pool for a whole run.
pub struct ZoEngine {
    cfg: FiniteDiffConfig,
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for ZoEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZoEngine").field("cfg", &self.cfg).finish()
    }
}

impl ZoEngine {
    pub fn new(cfg: FiniteDiffConfig) -> Result<Self> {
        cfg.validate()?;
        let pool = if cfg.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.workers)
                    .thread_name(|i| format!("zo-worker-{i}"))
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { cfg, pool })
    }

    /// Single-worker engine with the default step.
    pub fn sequential() -> Self {
        Self::new(FiniteDiffConfig::default()).expect("default config is valid")
    }

    pub fn with_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(FiniteDiffConfig {
            epsilon,
            workers: 1,
        })
    }

    pub fn config(&self) -> &FiniteDiffConfig {
        &self.cfg
    }

    pub fn epsilon(&self) -> f64 {
        self.cfg.epsilon
    }

    pub fn workers(&self) -> usize {
        self.cfg.workers
    }

    /// Evaluates `U` at every point in one round.
    pub fn evaluate_round<P: Potential + ?Sized>(
        &self,
        target: &P,
        points: &[Vec<f64>],
        ledger: &mut RoundLedger,
    ) -> Vec<f64> {
        if points.is_empty() {
            return Vec::new();
        }
        ledger.charge(points.len());
        match &self.pool {
            None => points.iter().map(|p| target.value(p)).collect(),
            Some(pool) => pool.install(|| {
                points
                    .par_iter()
                    .with_max_len(1)
                    .map(|p| target.value(p))
                    .collect()
            }),
        }
    }

    /// One round computing the forward differences along every column of
    /// `v`. When `base` is `None`, `U(x)` is computed inside the same round
    /// and charged as one extra evaluation.
    pub fn directional_derivatives<P: Potential + ?Sized>(
        &self,
        target: &P,
        x: &[f64],
        base: Option<f64>,
        v: &DirectionMatrix,
        ledger: &mut RoundLedger,
    ) -> Result<SliceDerivatives> {
        check_dim(target.dim(), x.len())?;
        check_dim(v.dim(), x.len())?;
        let m = v.count();
        let tasks = m + usize::from(base.is_none());
        let eps = self.cfg.epsilon;

        // task i < m evaluates x + εv⁽ⁱ⁾, task m (if any) evaluates x
        let eval = |buf: &mut Vec<f64>, i: usize| -> f64 {
            if i == m {
                return target.value(x);
            }
            match v {
                DirectionMatrix::Canonical { indices, .. } => {
                    let j = indices[i];
                    buf[j] = x[j] + eps;
                    let u = target.value(buf);
                    buf[j] = x[j];
                    u
                }
                DirectionMatrix::Dense { .. } => {
                    buf.copy_from_slice(x);
                    v.add_column(i, eps, buf);
                    target.value(buf)
                }
            }
        };

        ledger.charge(tasks);
        let values: Vec<f64> = match &self.pool {
            None => {
                let mut buf = x.to_vec();
                (0..tasks).map(|i| eval(&mut buf, i)).collect()
            }
            Some(pool) => pool.install(|| {
                (0..tasks)
                    .into_par_iter()
                    .with_max_len(1)
                    .map_init(|| x.to_vec(), |buf, i| eval(buf, i))
                    .collect()
            }),
        };

        let base = match base {
            Some(b) => b,
            None => values[m],
        };
        if !base.is_finite() {
            return Err(Error::NonFiniteBase);
        }
        let mut out = Vec::with_capacity(m);
        for (i, &u) in values[..m].iter().enumerate() {
            if !u.is_finite() {
                return Err(Error::NonFiniteDirection { direction: i });
            }
            out.push((u - base) / eps);
        }
        Ok(SliceDerivatives { values: out, base })
    }

    /// Samples `V` from `law` and returns `ĝ = (d/m) V g_slice`, consuming
    /// exactly one round.
    #[allow(clippy::too_many_arguments)]
    pub fn gradient_estimate<P: Potential + ?Sized>(
        &self,
        target: &P,
        x: &[f64],
        base: Option<f64>,
        law: DirectionLaw,
        m: usize,
        rng: &mut dyn RngCore,
        ledger: &mut RoundLedger,
    ) -> Result<ZoGradientEstimate> {
        let d = target.dim();
        let directions = law.sample(rng, d, m)?;
        self.estimate_along(target, x, base, directions, ledger)
    }

    /// As [`Self::gradient_estimate`] with a caller-supplied `V`.
    pub fn estimate_along<P: Potential + ?Sized>(
        &self,
        target: &P,
        x: &[f64],
        base: Option<f64>,
        directions: DirectionMatrix,
        ledger: &mut RoundLedger,
    ) -> Result<ZoGradientEstimate> {
        let d = target.dim();
        let m = directions.count();
        let sd = self.directional_derivatives(target, x, base, &directions, ledger)?;
        let mut full = vec![0.0; d];
        directions.add_lifted(&sd.values, DirectionLaw::scaling(d, m), &mut full);
        Ok(ZoGradientEstimate {
            directions,
            slice: sd.values,
            full,
            base: sd.base,
        })
    }
}

/// `Vᵀ∇U(x)` from the analytic-gradient test oracle.
pub fn exact_slice_gradient<P: GradientOracle + ?Sized>(
    target: &P,
    x: &[f64],
    v: &DirectionMatrix,
) -> Result<Vec<f64>> {
    let g = target.gradient(x)?;
    v.project(&g)
}

/// Learning-rate schedule `t ↦ l_t` for [`zo_sgd_minimize`].
pub enum LearningRate<'a> {
    Constant(f64),
    Schedule(&'a dyn Fn(usize) -> f64),
}

impl LearningRate<'_> {
    fn at(&self, t: usize) -> f64 {
        match self {
            LearningRate::Constant(l) => *l,
            LearningRate::Schedule(f) => f(t),
        }
    }
}

pub const DIVERGENCE_NORM: f64 = 1e8;

/// Zeroth-order stochastic gradient descent: at each step draw `V`, then
/// `x_t = x_{t−1} − l_t ĝ_V(x_{t−1})`.
#[allow(clippy::too_many_arguments)]
pub fn zo_sgd_minimize<P: Potential + ?Sized>(
    target: &P,
    x0: &[f64],
    law: DirectionLaw,
    m: usize,
    rate: LearningRate<'_>,
    steps: usize,
    engine: &ZoEngine,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, RoundLedger)> {
    check_dim(target.dim(), x0.len())?;
    check_finite(x0)?;
    let mut ledger = RoundLedger::default();
    let mut x = x0.to_vec();
    for t in 1..=steps {
        let est = engine.gradient_estimate(target, &x, None, law, m, rng, &mut ledger)?;
        let lr = rate.at(t);
        for (xi, gi) in x.iter_mut().zip(&est.full) {
            *xi -= lr * gi;
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Diverged { step: t, norm });
        }
    }
    Ok((x, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{FlatTarget, GaussianTarget};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_difference_on_quadratic() {
        let t = GaussianTarget::standard(2);
        let engine = ZoEngine::with_epsilon(1e-6).unwrap();
        let v = DirectionMatrix::from_indices(2, vec![0]).unwrap();
        let mut ledger = RoundLedger::default();
        let g = engine
            .directional_derivatives(&t, &[1.0, 0.0], None, &v, &mut ledger)
            .unwrap();
        assert!((g.values[0] - (1.0 + 5e-7)).abs() < 1e-9);
        assert_eq!(ledger, RoundLedger { rounds: 1, evals: 2, widest_round: 2 });
    }

    #[test]
    fn full_basis_recovers_gradient() {
        let t = GaussianTarget::standard(2);
        let engine = ZoEngine::sequential();
        let mut ledger = RoundLedger::default();
        let g = engine
            .directional_derivatives(&t, &[3.0, 4.0], Some(12.5), &DirectionMatrix::identity(2), &mut ledger)
            .unwrap();
        assert!((g.values[0] - 3.0).abs() < 1e-5 && (g.values[1] - 4.0).abs() < 1e-5);
        assert_eq!(ledger.evals, 2);
    }

    #[test]
    fn estimate_lies_in_span() {
        let t = GaussianTarget::standard(7);
        let engine = ZoEngine::sequential();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ledger = RoundLedger::default();
        let x = [0.3, -1.0, 2.0, 0.1, 0.5, -0.7, 1.1];
        let est = engine
            .gradient_estimate(&t, &x, None, DirectionLaw::UniformStiefel, 3, &mut rng, &mut ledger)
            .unwrap();
        let p = est.directions.projector();
        let g = nalgebra::DVector::from_column_slice(&est.full);
        assert!((&g - &p * &g).norm() <= 1e-10);
        assert_eq!(ledger.rounds, 1);
    }

    #[test]
    fn non_finite_direction_is_named() {
        struct Wall;
        impl Potential for Wall {
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, x: &[f64]) -> f64 {
                if x[1] > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
        let engine = ZoEngine::sequential();
        let mut ledger = RoundLedger::default();
        let err = engine
            .directional_derivatives(&Wall, &[0.0, 0.0], None, &DirectionMatrix::identity(2), &mut ledger)
            .unwrap_err();
        assert_eq!(err, Error::NonFiniteDirection { direction: 1 });
        assert_eq!(ledger.rounds, 1);
    }

    #[test]
    fn sgd_with_zero_rate_is_identity() {
        let t = GaussianTarget::standard(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x0 = [1.0, 2.0, 3.0, 4.0];
        let (x, ledger) = zo_sgd_minimize(
            &t,
            &x0,
            DirectionLaw::CanonicalSubset,
            2,
            LearningRate::Constant(0.0),
            10,
            &ZoEngine::sequential(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(x, x0);
        assert_eq!(ledger.rounds, 10);
        assert_eq!(ledger.evals, 30);
    }

    #[test]
    fn sgd_divergence_is_detected() {
        let t = GaussianTarget::standard(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = zo_sgd_minimize(
            &t,
            &[1.0, 1.0],
            DirectionLaw::CanonicalSubset,
            2,
            LearningRate::Constant(10.0),
            100,
            &ZoEngine::sequential(),
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
    }

    #[test]
    fn flat_target_has_zero_derivatives() {
        let t = FlatTarget::new(3, 2.0);
        let mut ledger = RoundLedger::default();
        let g = ZoEngine::sequential()
            .directional_derivatives(&t, &[0.0; 3], None, &DirectionMatrix::identity(3), &mut ledger)
            .unwrap();
        assert_eq!(g.values, vec![0.0; 3]);
    }

    #[test]
    fn config_validation() {
        assert!(ZoEngine::new(FiniteDiffConfig { epsilon: 0.0, workers: 1 }).is_err());
        assert!(ZoEngine::new(FiniteDiffConfig { epsilon: 1e-5, workers: 0 }).is_err());
    }
}
