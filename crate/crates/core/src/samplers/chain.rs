use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    adapt_scale, AdaptationConfig, ChainState, Kernel, Mtm, NaiveZoMala, Preconditioned, RsHmc,
    Rwm, ZoUla,
};
use crate::diagnostics::{Trajectory, TrajectoryMeta};
use crate::directions::DirectionLaw;
use crate::engine::{FiniteDiffConfig, RoundLedger, ZoEngine};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::targets::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Rwm,
    ZoUla,
    #[serde(rename = "naive-mala")]
    NaiveZoMala,
    /// RS-HMC with `L = 1`, whatever `leapfrog_steps` says.
    RsMala,
    RsHmc,
    Mtm,
}

impl KernelKind {
    pub const ALL: [KernelKind; 6] = [
        KernelKind::Rwm,
        KernelKind::ZoUla,
        KernelKind::NaiveZoMala,
        KernelKind::RsMala,
        KernelKind::RsHmc,
        KernelKind::Mtm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Rwm => "rwm",
            KernelKind::ZoUla => "zo-ula",
            KernelKind::NaiveZoMala => "naive-mala",
            KernelKind::RsMala => "rs-mala",
            KernelKind::RsHmc => "rs-hmc",
            KernelKind::Mtm => "mtm",
        }
    }

    /// Whether `m` changes what the kernel does.
    pub fn uses_directions(self) -> bool {
        !matches!(self, KernelKind::Rwm)
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown kernel '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub kernel: KernelKind,
    /// Directions per step (tries for MTM).
    pub m: usize,
    pub law: DirectionLaw,
    /// `σ` for RWM, naive ZO-MALA and MTM.
    pub proposal_scale: f64,
    pub ula_step: f64,
    pub leapfrog_step: f64,
    pub leapfrog_steps: usize,
    pub fd: FiniteDiffConfig,
    pub adaptation: AdaptationConfig,
    /// Rows of `A` for the reparameterization `y = Ax`.
    pub preconditioner: Option<Vec<Vec<f64>>>,
    /// Keep every `thin`-th state.
    pub thin: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            kernel: KernelKind::RsHmc,
            m: 1,
            law: DirectionLaw::UniformStiefel,
            proposal_scale: 0.1,
            ula_step: 0.01,
            leapfrog_step: 0.1,
            leapfrog_steps: 1,
            fd: FiniteDiffConfig::default(),
            adaptation: AdaptationConfig::default(),
            preconditioner: None,
            thin: 1,
        }
    }
}

impl SamplerConfig {
    pub fn new(kernel: KernelKind, m: usize) -> Self {
        Self {
            kernel,
            m,
            ..Self::default()
        }
    }

    pub fn effective_leapfrog_steps(&self) -> usize {
        match self.kernel {
            KernelKind::RsHmc => self.leapfrog_steps,
            _ => 1,
        }
    }

    pub fn build_kernel(&self, d: usize) -> Result<Box<dyn Kernel>> {
        if self.kernel.uses_directions() && self.kernel != KernelKind::Mtm && self.m > d {
            return Err(Error::InvalidConfig(format!(
                "m = {} exceeds dimension {d}",
                self.m
            )));
        }
        let inner: Box<dyn Kernel> = match self.kernel {
            KernelKind::Rwm => Box::new(Rwm::new(self.proposal_scale)?),
            KernelKind::ZoUla => Box::new(ZoUla::new(self.ula_step, self.m, self.law)?),
            KernelKind::NaiveZoMala => Box::new(NaiveZoMala::new(self.proposal_scale, self.m, self.law)?),
            KernelKind::RsMala => Box::new(RsHmc::rs_mala(self.leapfrog_step, self.m, self.law)?),
            KernelKind::RsHmc => Box::new(RsHmc::new(
                self.leapfrog_step,
                self.leapfrog_steps,
                self.m,
                self.law,
            )?),
            KernelKind::Mtm => Box::new(Mtm::new(self.proposal_scale, self.m)?),
        };
        match &self.preconditioner {
            None => Ok(inner),
            Some(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidConfig(format!(
                        "preconditioner must be {d}×{d}"
                    )));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                let a = DMatrix::from_row_slice(d, d, &flat);
                Ok(Box::new(Preconditioned::new(inner, a)?))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fd.validate()?;
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        let a = &self.adaptation;
        if !(0.0..=1.0).contains(&a.burn_in_fraction) {
            return Err(Error::InvalidConfig("burn-in fraction must lie in [0, 1]".into()));
        }
        if let Some(t) = a.target_acceptance {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidConfig("target acceptance must lie in (0, 1)".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    /// Over iterations after burn-in.
    pub acceptance_rate: f64,
    pub final_scale: f64,
    pub divergences: usize,
    /// Number of burn-in iterations.
    pub burn_in: usize,
    /// Index of the first post-burn-in state in the trajectory.
    pub burn_in_states: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ChainRun {
    /// All kept states, starting with `x₀`.
    pub trajectory: Trajectory,
    pub ledger: RoundLedger,
    pub diagnostics: ChainDiagnostics,
}

impl ChainRun {
    pub fn post_burn_in(&self) -> Trajectory {
        self.trajectory.tail(self.diagnostics.burn_in_states)
    }
}

/// Runs `iterations` steps from `x0` with its own engine.
pub fn run_chain(
    target: &dyn Potential,
    config: &SamplerConfig,
    iterations: usize,
    x0: &[f64],
    seed: u64,
) -> Result<ChainRun> {
    let engine = ZoEngine::new(config.fd)?;
    run_chain_with(&engine, target, config, iterations, x0, seed)
}

/// As [`run_chain`], reusing an existing engine (its step and worker count
/// take precedence over `config.fd`).
pub fn run_chain_with(
    engine: &ZoEngine,
    target: &dyn Potential,
    config: &SamplerConfig,
    iterations: usize,
    x0: &[f64],
    seed: u64,
) -> Result<ChainRun> {
    config.validate()?;
    let d = target.dim();
    check_dim(d, x0.len())?;
    check_finite(x0)?;
    let mut kernel = config.build_kernel(d)?;
    let warnings = kernel.warnings(target);
    for w in &warnings {
        log::warn!("{w}");
    }

    let adapt = &config.adaptation;
    let target_acc = adapt.target_acceptance.or(kernel.target_acceptance());
    let adapting = adapt.enabled && kernel.target_acceptance().is_some();
    let burn_in = (iterations as f64 * adapt.burn_in_fraction).floor() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ledger = RoundLedger::default();
    let mut traj = Trajectory::new(
        d,
        TrajectoryMeta {
            kernel: kernel.name().to_string(),
            directions: config.m,
            leapfrog_steps: kernel.leapfrog_steps(),
            law: config.kernel.uses_directions().then_some(config.law),
        },
    );
    traj.push(x0)?;
    let mut state = ChainState::new(x0.to_vec());
    let mut divergences = 0;
    let mut post_accepts = 0usize;

    for t in 1..=iterations {
        let out = kernel
            .step(target, &state, engine, &mut rng, &mut ledger)
            .map_err(|e| Error::AtIteration {
                iteration: t,
                source: Box::new(e),
            })?;
        if out.divergent {
            divergences += 1;
        }
        if t <= burn_in {
            if adapting {
                if let Some(target_acc) = target_acc {
                    let s = adapt_scale(out.accepted, kernel.scale(), target_acc, t, adapt.decay);
                    kernel.set_scale(s);
                }
            }
        } else if out.accepted {
            post_accepts += 1;
        }
        state = out.state;
        if t % config.thin == 0 {
            traj.push(&state.x)?;
            traj.accepted.push(out.accepted);
        }
    }

    let post = iterations - burn_in;
    Ok(ChainRun {
        trajectory: traj,
        ledger,
        diagnostics: ChainDiagnostics {
            acceptance_rate: if post > 0 {
                post_accepts as f64 / post as f64
            } else {
                0.0
            },
            final_scale: kernel.scale(),
            divergences,
            burn_in,
            burn_in_states: burn_in / config.thin,
            warnings,
        },
    })
}
