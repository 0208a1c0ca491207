//! Zeroth-order parallel MCMC.
//!
//! Targets are only ever evaluated, never differentiated. Gradients along a
//! random `m`-dimensional slice come from forward differences computed as a
//! single parallel round, and the samplers in [`samplers`] count every round
//! they spend in a [`RoundLedger`].
//!
//! ```
//! use zoslice::{run_chain, GaussianTarget, KernelKind, SamplerConfig};
//!
//! let target = GaussianTarget::standard(10);
//! let cfg = SamplerConfig { leapfrog_steps: 3, ..SamplerConfig::new(KernelKind::RsHmc, 2) };
//! let run = run_chain(&target, &cfg, 500, &[0.0; 10], 7).unwrap();
//! assert_eq!(run.trajectory.len(), 501);
//! assert_eq!(run.ledger.rounds, 500 * 4);
//! ```

// `!(a <= b)` is used on purpose so that NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod directions;
pub mod engine;
mod error;
pub mod samplers;
pub mod targets;

pub use diagnostics::{
    efficiency, eff_sweep, esjd, moment_stationarity_check, relative_gain, round_cost,
    w2_contraction_estimate, ContractionEstimate, EffPoint, EffRow, EfficiencyReport,
    MomentReport, MomentThresholds, Trajectory, TrajectoryMeta,
};
pub use directions::{DirectionLaw, DirectionMatrix};
pub use engine::{
    exact_slice_gradient, zo_sgd_minimize, FiniteDiffConfig, LearningRate, RoundLedger,
    SliceDerivatives, ZoEngine, ZoGradientEstimate, DEFAULT_EPSILON,
};
pub use error::{Error, Result};
pub use samplers::{
    run_chain, run_chain_with, AdaptationConfig, ChainDiagnostics, ChainRun, ChainState, Kernel,
    KernelKind, KernelOutcome, SamplerConfig,
};
pub use targets::{
    Curvature, GaussianTarget, GradientOracle, LogisticRegressionTarget, Potential,
    StochasticVolatilityTarget, TargetModel,
};
